#include "verigin/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace verigin {

double golden_section_min(const std::function<double(double)>& fn, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

double prox_oracle(double q, double eps_prime, int chi, double m) {
    if (!(q > 0.0) || !(eps_prime > 0.0)) throw std::invalid_argument("prox_oracle: q, eps' must be > 0");
    const double lq = std::log(q);
    auto obj = [&](double t) {
        const double s = std::exp(t);
        return f(s, m) - double(chi) * s + eps_prime * (s * (t - lq) - s + q);
    };
    // generous bracket in log s around the kernel image
    const double lo = lq - (2.0 + double(chi)) / eps_prime - 60.0;
    const double hi = lq + 2.0 / eps_prime + 60.0;
    const double t = golden_section_min(obj, lo, hi, 1e-14);
    return std::exp(t);
}

BruteForceResult brute_force_joint(const ScalarField& rho_prev, const StepConfig& cfg,
                                   const EnumerationBudget& budget) {
    const Grid& g = rho_prev.grid;
    if (g.dim != 1) throw std::invalid_argument("brute_force_joint: 1D only");
    const int n = g.n[0];
    if (n > budget.max_cells)
        throw std::invalid_argument("brute_force_joint: grid too large for enumeration budget");

    const double inv2h = 0.5 / cfg.h;
    BruteForceResult best;
    bool have = false;
    for (std::uint32_t code = 0; code < (1u << n); ++code) {
        PhaseField chi(g, 0);
        for (int i = 0; i < n; ++i) chi[i] = (code >> i) & 1u;
        DensityResult d = solve_density(rho_prev, chi, cfg);
        const double obj = inv2h * d.w2_dual + total_energy(d.rho, chi, cfg.energy).total;
        if (!have || obj < best.objective) {
            have = true;
            best.objective = obj;
            best.chi = chi;
            best.rho = d.rho;
            best.chi_code = code;
        }
    }
    return best;
}

FdGradientReport fd_gradient_check(const ScalarField& rho, double m,
                                   const std::function<std::array<double, 3>(std::array<double, 3>)>& xi_grad_diag,
                                   double s) {
    const Grid& g = rho.grid;
    const double w = g.cell_volume();
    // G(s) = int f(rho_s) dx = sum f(rho_i / J_i(s)) J_i(s) w by change of variables,
    // J(s) = prod_a (1 + s d_a xi_a) (diagonal part suffices to first order in s)
    auto G = [&](double sv) {
        std::vector<double> terms(rho.v.size());
        for (std::int64_t i = 0; i < rho.size(); ++i) {
            const auto dg = xi_grad_diag(g.point(i));
            double J = 1.0;
            for (int a = 0; a < g.dim; ++a) J *= 1.0 + sv * dg[std::size_t(a)];
            terms[std::size_t(i)] = f(rho[i] / J, m) * J;
        }
        return pairwise_sum(terms) * w;
    };
    FdGradientReport rep;
    rep.fd_derivative = (G(s) - G(-s)) / (2.0 * s);
    std::vector<double> terms(rho.v.size());
    for (std::int64_t i = 0; i < rho.size(); ++i) {
        const auto dg = xi_grad_diag(g.point(i));
        double div = 0.0;
        for (int a = 0; a < g.dim; ++a) div += dg[std::size_t(a)];
        terms[std::size_t(i)] = -std::pow(rho[i], m) * div;
    }
    rep.analytic_derivative = pairwise_sum(terms) * w;
    rep.abs_error = std::abs(rep.fd_derivative - rep.analytic_derivative);
    return rep;
}

} // namespace verigin
