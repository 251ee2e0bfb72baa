#pragma once

#include "verigin/diagnostics.hpp"
#include "verigin/stepper.hpp"

#include <string>

namespace verigin {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // grid
    int dim = 1;
    std::array<int, 3> cells{256, 1, 1};
    std::array<double, 3> domain_min{0.0, 0.0, 0.0};
    std::array<double, 3> domain_max{1.0, 1.0, 1.0};
    // energy
    double m = 1.0;
    double lambda = 1.0;
    double sigma = 1.0;
    double c_omega = -1.0; // -1 = auto
    // transport
    double eps0 = 0.0;    // 0 = auto
    double eps_min = 0.0; // 0 = auto
    double gamma = 0.7;
    int max_sweeps = 20000;
    double tol_marginal = 1e-8;
    bool debias = false;
    // stepper
    double h = 1e-3;
    double T = 0.2;
    int outer_max = 50;
    double outer_tol = 0.0; // 0 = auto
    double newton_tol = 1e-13;
    int pd_max = 400000;
    double pd_tol = 1e-9;
    // initial data
    std::string rho_preset = "gaussian"; // uniform | gaussian | two-bump
    std::array<double, 3> rho_center{0.5, 0.5, 0.5};
    std::array<double, 3> rho_center2{0.75, 0.5, 0.5};
    double rho_width = 0.08;
    std::string chi_preset = "interval"; // empty | full | interval | disk | random
    double chi_a = 0.4;
    double chi_b = 0.6;
    std::array<double, 3> chi_center{0.5, 0.5, 0.5};
    double chi_radius = 0.2;
    double chi_p = 0.5;
    std::uint64_t seed = 1;
    // diagnostics
    DiagnosticsConfig diag;
    // output
    std::string outdir = "out";
    int checkpoint_every = 1;
    std::int64_t corrupt_step = 0; // fault injection: inflate that step's energy by 1

    Grid grid() const;
    StepConfig step_config() const;
    EnergyParams energy_params() const; // c_omega resolved against the grid
};

// strict key=value parser: '#' comments, unknown keys and out-of-range values are
// errors carrying the line number
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// canonical echo; parse_config_text(echo(cfg)) reproduces cfg bit-exactly
std::string echo_config(const RunConfig& cfg);
std::string default_config_text();

std::pair<ScalarField, PhaseField> init_data(const RunConfig& cfg);

// atomic text write (temp + rename)
void write_text_atomic(const std::string& path, const std::string& content);

void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const PhaseField& f);
ScalarField read_scalar_field(const std::string& path, const Grid& g);
PhaseField read_phase_field(const std::string& path, const Grid& g);

std::string timeseries_csv(const Trajectory& traj);
std::string certificates_csv(const TrajectoryReport& rep);
std::string report_text(const Trajectory& traj, const TrajectoryReport& rep);

void export_trajectory(const Trajectory& traj, const std::string& dir, int checkpoint_every);

// rebuilds a trajectory from an exported run directory (needs checkpoint_every=1)
Trajectory load_trajectory(const std::string& dir, RunConfig* cfg_out = nullptr);

// full pipeline: run, diagnostics, export. exit code 0 = all certificates pass,
// 1 = solver/config error, 2 = certificate failure
int run(const RunConfig& cfg);
int run_config_file(const std::string& path, std::int64_t corrupt_step_override = -1);

// reload an exported run and re-verify all enabled certificates
int check_run_dir(const std::string& dir);

// tiny-instance brute-force comparison (verigin oracle <config>)
int oracle_compare(const RunConfig& cfg);

std::string format_g17(double x);

} // namespace verigin
