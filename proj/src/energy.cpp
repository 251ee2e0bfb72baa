#include "verigin/energy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace verigin {

void EnergyParams::validate() const {
    if (m < 1.0) throw std::invalid_argument("EnergyParams: m must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("EnergyParams: lambda must be > 0");
    if (c_omega < 0.0) throw std::invalid_argument("EnergyParams: c_omega must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("EnergyParams: sigma must be > 0");
}

double f(double s, double m) {
    if (s < 0.0) throw std::domain_error("f: negative density");
    if (m == 1.0) return s == 0.0 ? 0.0 : s * std::log(s);
    return std::pow(s, m) / (m - 1.0);
}

double f_prime(double s, double m) {
    if (m == 1.0) {
        if (s <= 0.0) throw std::domain_error("f_prime: s must be > 0 for m = 1");
        return std::log(s) + 1.0;
    }
    if (s < 0.0) throw std::domain_error("f_prime: negative density");
    return m / (m - 1.0) * std::pow(s, m - 1.0);
}

double perimeter(const PhaseField& chi) {
    const Grid& g = chi.grid;
    double per = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        const double area = g.face_area(a);
        std::int64_t jumps = 0;
        const std::int64_t nc = g.cells();
        for (std::int64_t i = 0; i < nc; ++i) {
            const int k = g.unflatten(i)[a];
            if (k == g.n[a] - 1) continue;
            if (chi[i] != chi[i + s]) ++jumps;
        }
        per += double(jumps) * area;
    }
    return per;
}

EnergyBreakdown total_energy(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p) {
    const Grid& g = rho.grid;
    const auto nc = g.cells();
    const auto sz = std::size_t(nc);
    std::vector<double> fr(sz), cp(sz);
    for (std::int64_t i = 0; i < nc; ++i) {
        fr[std::size_t(i)] = f(rho[i], p.m);
        cp[std::size_t(i)] = chi[i] ? (p.lambda - rho[i]) : 0.0;
    }
    EnergyBreakdown b;
    b.perimeter = p.sigma * perimeter(chi);
    b.internal = pairwise_sum(fr) * g.cell_volume();
    b.coupling = pairwise_sum(cp) * g.cell_volume();
    b.total = b.perimeter + b.internal + b.coupling + p.c_omega;
    return b;
}

ScalarField pressure(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p) {
    ScalarField out(rho.grid);
    for (std::int64_t i = 0; i < rho.size(); ++i)
        out[i] = std::pow(rho[i], p.m) - p.lambda * double(chi[i]);
    return out;
}

ScalarField chemical_potential(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p) {
    ScalarField out(rho.grid);
    for (std::int64_t i = 0; i < rho.size(); ++i) {
        if (rho[i] == 0.0 && p.m == 1.0)
            out[i] = -std::numeric_limits<double>::infinity();
        else
            out[i] = f_prime(rho[i], p.m) - double(chi[i]) + 1.0;
    }
    return out;
}

double default_c_omega(const EnergyParams& p, const Grid& grid) {
    // pointwise f >= -1/e for m=1 (and >= 0 for m>1); coupling >= -int rho = -1
    if (p.m == 1.0) return grid.volume() / std::exp(1.0) + 1.0;
    return 1.0;
}

} // namespace verigin
