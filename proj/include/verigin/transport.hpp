#pragma once

#include "verigin/grid.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace verigin {

struct EntropicParams {
    double eps0 = 0.0;    // 0 = auto: (max extent)^2 / 16
    double eps_min = 0.0; // 0 = auto: 4 * (max dx)^2
    double gamma = 0.7;   // eps decay per level, in (0,1)
    int max_sweeps = 20000;
    double tol_marginal = 1e-8; // L1 mass violation on the source side
    bool debias = false;        // reporting only

    EntropicParams resolved(const Grid& g) const;
    void validate() const;
};

// dual pair at the regularization it was produced with; u lives on the
// current/target side, v on the source/previous side (half-quadratic cost)
struct DualPotentials {
    ScalarField u;
    ScalarField v;
    double eps = 0.0;
};

struct TransportResult {
    double w2_squared = 0.0;
    DualPotentials potentials;
    double marginal_error = 0.0;
    ScalarField rho; // current-side density, kept for support-based normalization
    int sweeps = 0;
    double w2_dual = 0.0; // 2*(<P,u>+<Q,v>), the entropic dual value
    double w2_debiased = std::numeric_limits<double>::quiet_NaN();
};

struct TransportError : std::runtime_error {
    double marginal_error;
    TransportError(const std::string& msg, double err) : std::runtime_error(msg), marginal_error(err) {}
};

// W2^2 between 1D piecewise-constant densities via exact quantile-segment integration
double w2_exact_1d(const ScalarField& rho, const ScalarField& sigma);

// log-domain scaling iterations with eps-scaling; deterministic
TransportResult sinkhorn(const ScalarField& rho, const ScalarField& sigma, const EntropicParams& params);

// phi = u/h, gauge-fixed to zero rho-weighted mean over supp rho
ScalarField kantorovich_potential(const TransportResult& res, double h);

// supp rho := cells with rho > 1e-10 * max rho
std::vector<std::uint8_t> support_mask(const ScalarField& rho);

namespace detail {
std::vector<double> eps_schedule(double eps0, double eps_min, double gamma);
// log cell masses normalized to total 1; -inf where zero
std::vector<double> log_masses(const ScalarField& rho);
} // namespace detail

} // namespace verigin
