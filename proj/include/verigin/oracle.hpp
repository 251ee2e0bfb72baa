#pragma once

#include "verigin/stepper.hpp"

#include <functional>

namespace verigin {

struct EnumerationBudget {
    int max_cells = 12;
};

struct BruteForceResult {
    PhaseField chi;
    ScalarField rho;
    double objective = 0.0; // (1/2h) w2_dual + full energy, same evaluation as jko_step
    std::uint32_t chi_code = 0;
};

// global minimum of the entropic surrogate step over all 2^N phase fields (1D, tiny N);
// shares solve_density with the stepper, tie-break by lowest binary-encoded chi
BruteForceResult brute_force_joint(const ScalarField& rho_prev, const StepConfig& cfg,
                                   const EnumerationBudget& budget);

// derivative-free scalar minimizer on [lo,hi], tolerance on the argument
double golden_section_min(const std::function<double(double)>& fn, double lo, double hi, double tol);

// minimizes f(s) - chi*s + eps'*(s log(s/q) - s + q) over s > 0 by golden section in log s
double prox_oracle(double q, double eps_prime, int chi, double m);

struct FdGradientReport {
    double fd_derivative = 0.0;       // central finite difference of int f(rho_s)
    double analytic_derivative = 0.0; // -int rho^m div xi
    double abs_error = 0.0;
};

// validates d/ds|_0 int f(rho_s) = -int rho^m div xi along the transport perturbation
// (rho_s o Phi_s) J Phi_s = rho, with J computed from the analytic Jacobian of xi
FdGradientReport fd_gradient_check(const ScalarField& rho, double m,
                                   const std::function<std::array<double, 3>(std::array<double, 3>)>& xi_grad_diag,
                                   double s);

} // namespace verigin
