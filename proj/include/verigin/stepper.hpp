#pragma once

#include "verigin/energy.hpp"
#include "verigin/grid.hpp"
#include "verigin/transport.hpp"

#include <functional>
#include <vector>

namespace verigin {

struct StepConfig {
    double h = 1e-3;
    EnergyParams energy;
    EntropicParams entropic;
    int outer_max = 50;
    double outer_tol = 0.0; // 0 = auto: 1e-9*(1+E0); run_flow resolves from its initial data,
                            // a standalone jko_step from E(rho_prev, chi_prev)
    double newton_tol = 1e-13;
    int pd_max = 400000;
    double pd_tol = 1e-9;

    void validate() const;
};

struct SubsolverStats {
    int sweeps = 0;
    double marginal_error = 0.0;
    int newton_max_iters = 0;
    int pd_iters = 0;
    double pd_gap = 0.0;
    double phase_relaxed_energy = 0.0;
    double phase_thresholded_energy = 0.0;
    bool outer_converged = true; // false iff outer_max was hit with chi still changing
    bool outer_stalled = false;  // objective decrease < outer_tol while chi changed
    double w2_dual = 0.0;
    double monotonicity_violation = 0.0; // max increase of the outer objective, 0 if monotone
    std::vector<double> outer_objectives;
};

struct StepResult {
    ScalarField rho;
    PhaseField chi;
    ScalarField phi; // gauge-fixed Kantorovich potential
    double w2_squared = 0.0;
    EnergyBreakdown energy;
    int outer_iters = 0;
    SubsolverStats stats;
};

struct Trajectory {
    Grid grid;
    ScalarField rho0;
    PhaseField chi0;
    StepConfig cfg;
    EnergyBreakdown energy0;
    std::vector<StepResult> steps;

    // piecewise-constant interpolation: state at time t
    const ScalarField& rho_at_step(std::int64_t n) const { return n == 0 ? rho0 : steps[std::size_t(n - 1)].rho; }
    const PhaseField& chi_at_step(std::int64_t n) const { return n == 0 ? chi0 : steps[std::size_t(n - 1)].chi; }
    double energy_at_step(std::int64_t n) const { return n == 0 ? energy0.total : steps[std::size_t(n - 1)].energy.total; }
    std::int64_t step_of_time(double t) const;
};

struct DensityResult {
    ScalarField rho;
    ScalarField phi;
    double w2_squared = 0.0;
    double w2_dual = 0.0;
    double marginal_error = 0.0;
    int sweeps = 0;
    int newton_max_iters = 0;
    DualPotentials potentials;
};

struct PhaseResult {
    PhaseField chi;
    double relaxed_energy = 0.0;     // value of the (1D exact / d>=2 relaxed) phase objective
    double thresholded_energy = 0.0; // sigma*P(chi) + sum chi (lambda-rho) w
    int pd_iters = 0;
    double pd_gap = 0.0;
};

// KL-proximal map of s -> f(s) - chi*s at kernel image exp(lkappa):
// solves f'(s) - chi + eta*(log s - lkappa) = 0, returns log s.
// Closed form for m=1, safeguarded Newton for m>1.
double kl_prox_log(double lkappa, int chi, double eta, double m, double newton_tol, int max_iters,
                   int* iters_out);

// minimize (1/2h) W2^2_eps(rho, rho_prev) + int f(rho) - int chi rho over unit-mass rho
DensityResult solve_density(const ScalarField& rho_prev, const PhaseField& chi, const StepConfig& cfg);

// minimize sigma*P(chi) + int chi (lambda - rho): exact DP in 1D,
// Chambolle-Pock relaxation + threshold at 1/2 for d >= 2; ties toward 0
PhaseResult solve_phase(const ScalarField& rho, const StepConfig& cfg);

StepResult jko_step(const ScalarField& rho_prev, const PhaseField& chi_prev, const StepConfig& cfg);

using StepCallback = std::function<void(std::int64_t step, const StepResult&)>;

Trajectory run_flow(const ScalarField& rho0, const PhaseField& chi0, double T, const StepConfig& cfg,
                    const StepCallback& on_step = nullptr);

// minimizer of (1/2t) W2^2(rho, rho_prev) + E(rho, chi) for t in (0, h]
StepResult degiorgi_interpolate(const ScalarField& rho_prev, const PhaseField& chi_prev, double t,
                                const StepConfig& cfg);

double resolve_outer_tol(const StepConfig& cfg, double initial_energy);

} // namespace verigin
