#pragma once

#include "verigin/stepper.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace verigin {

// one named inequality check; pass <=> slack = rhs - lhs >= -tol
struct CheckResult {
    std::string name;
    std::int64_t step = -1; // -1 for trajectory-level checks
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tol = 0.0;
    bool pass = true;
    std::string note;
};

CheckResult make_check(const std::string& name, std::int64_t step, double lhs, double rhs, double tol,
                       const std::string& note = "");

struct StabilityRow {
    std::int64_t n = 0;
    std::int64_t k = 0;
    double lhs = 0.0;         // int |chi_n - chi_{n+k}| (rho_n ^ rho_{n+k} ^ 1)^beta
    double lp_norm = 0.0;     // ||rho_n - rho_{n+k}||_Lp
    double dissipation = 0.0; // int |grad phi_n|^2 rho_n + same at n+k
    double ratio = 0.0;       // lhs / (lp + lp^gamma * dissipation^gamma)
};

struct MuckenhouptRow {
    std::int64_t step = 0;
    double c_w = 0.0;
};

struct TrajectoryReport {
    std::vector<CheckResult> checks;
    std::vector<StabilityRow> stability;
    std::vector<MuckenhouptRow> muckenhoupt;
    std::string w2_method; // "exact-1d" or "entropic-gradient"

    bool all_pass() const;
    int fail_count() const;
};

struct DiagnosticsConfig {
    bool dissipation = true;
    bool holder = true;
    int holder_samples = 20;
    bool optimality = true;
    bool jump = true;
    bool almost_min = true;
    int almost_min_competitors = 100;
    int sampled_steps = 10; // used by almost_min / euler_lagrange / muckenhoupt sampling
    int degiorgi_steps = 0; // re-solves; 0 disables
    bool euler_lagrange = true;
    bool optimal_dissipation = true;
    bool transport_residual = true;
    bool muckenhoupt = true;
    int muckenhoupt_radii = 12;
    bool stability = true;
    bool threshold_exactness = true; // d >= 2 runs only
    std::uint64_t seed = 1;
};

// smooth test vector field with analytic diagonal Jacobian, xi . nu = 0 on the boundary
struct SmoothField {
    std::function<std::array<double, 3>(std::array<double, 3>)> value;
    std::function<std::array<double, 3>(std::array<double, 3>)> grad_diag; // d_a xi_a
};

// smooth space-time test function
struct SpaceTimeField {
    std::function<double(std::array<double, 3>, double)> value;
    std::function<double(std::array<double, 3>, double)> dt;
    std::function<std::array<double, 3>(std::array<double, 3>, double)> grad;
};

// certificate tolerance: 10*outer_tol + a(eps), a(eps) = 2 eps log(cell count)
double cert_tol(const Trajectory& traj);
double entropic_allowance(double eps, std::int64_t cells);

// W2^2 between consecutive states used by certificates: exact 1D solver when dim==1,
// discrete h^2 int |grad phi_n|^2 rho_n otherwise (paper identity for the step metric)
double cert_step_w2sq(const Trajectory& traj, std::int64_t n);
// int |grad phi|^2 rho dx by grid gradient
double dissipation_integral(const ScalarField& rho, const ScalarField& phi);

std::vector<CheckResult> check_dissipation(const Trajectory& traj);
std::vector<CheckResult> check_holder(const Trajectory& traj, int samples);
std::vector<CheckResult> check_optimality(const Trajectory& traj, std::int64_t step);
CheckResult check_jump(const Trajectory& traj, std::int64_t step);
// max jump residual |f'(rho+) - f'(rho-) + 1| over interfaces with both sides in supp;
// count_out gets the number of admissible faces
double jump_residual(const ScalarField& rho, const PhaseField& chi, double m, std::int64_t* count_out = nullptr);

CheckResult check_almost_minimizing(const Trajectory& traj, std::int64_t step,
                                    const std::vector<PhaseField>& competitors, double extra_tol = 0.0);
std::vector<PhaseField> seeded_competitors(const Grid& g, const PhaseField& chi_n, int count, std::uint64_t seed);

CheckResult check_degiorgi(const ScalarField& rho_prev, const PhaseField& chi_prev, const StepConfig& cfg);

struct ElResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};
// discrete Euler-Lagrange identity residual; wrong_exponent replaces rho^m by rho^(m+1)
// (negative control)
ElResidual euler_lagrange_residual(const ScalarField& rho, const PhaseField& chi, const ScalarField& phi,
                                   const EnergyParams& p, const SmoothField& xi, bool wrong_exponent = false);
CheckResult check_euler_lagrange(const Trajectory& traj, std::int64_t step, const SmoothField& xi);

CheckResult check_optimal_dissipation(const Trajectory& traj, const SmoothField& xi);
double transport_residual(const Trajectory& traj, const SpaceTimeField& eta);
std::vector<CheckResult> check_transport_residual(const Trajectory& traj);

StabilityRow stability_report(const Trajectory& traj, std::int64_t n, std::int64_t k);

// closed form (d+1)/(2d) * ((d-1)/(2d))^((d-1)/(d+1)), in (0,1) for d >= 2
double alpha_d(int d);

// A1 constant estimate: max over balls (center x cells, given radii) of average/min
double muckenhoupt_a1(const ScalarField& w, const std::vector<double>& radii);
std::vector<double> muckenhoupt_default_radii(const Grid& g, int count);
// (rho ^ 1)^(d/(d-1)) for d >= 2; exponent 2 reused for d = 1 (reported as heuristic)
ScalarField muckenhoupt_weight(const ScalarField& rho);

TrajectoryReport run_diagnostics(const Trajectory& traj, const DiagnosticsConfig& dcfg);

// deterministic evenly spaced step sample in [1, nsteps]
std::vector<std::int64_t> sample_steps(std::int64_t nsteps, int count);

// standard 1D windowed test fields xi_k(x) = sin(k pi xhat) * sin^2(pi xhat), xhat scaled to [0,1]
SmoothField windowed_sine_field(const Grid& g, int k);

} // namespace verigin
