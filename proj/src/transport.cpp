#include "verigin/transport.hpp"

#include "verigin/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace verigin {

void EntropicParams::validate() const {
    if (!(eps0 > 0.0) || !(eps_min > 0.0)) throw std::invalid_argument("EntropicParams: eps must be > 0");
    if (eps_min > eps0) throw std::invalid_argument("EntropicParams: eps_min must be <= eps0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("EntropicParams: gamma must be in (0,1)");
    if (max_sweeps < 1) throw std::invalid_argument("EntropicParams: max_sweeps must be >= 1");
    if (!(tol_marginal > 0.0)) throw std::invalid_argument("EntropicParams: tol_marginal must be > 0");
}

EntropicParams EntropicParams::resolved(const Grid& g) const {
    EntropicParams p = *this;
    double ext = 0.0, dxmax = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        ext = std::max(ext, g.hi[a] - g.lo[a]);
        dxmax = std::max(dxmax, g.dx(a));
    }
    if (p.eps0 == 0.0) p.eps0 = ext * ext / 16.0;
    if (p.eps_min == 0.0) p.eps_min = 4.0 * dxmax * dxmax;
    p.eps_min = std::min(p.eps_min, p.eps0);
    p.validate();
    return p;
}

namespace detail {

std::vector<double> eps_schedule(double eps0, double eps_min, double gamma) {
    std::vector<double> s;
    double e = eps0;
    while (e > eps_min * (1.0 + 1e-12)) {
        s.push_back(e);
        e *= gamma;
    }
    s.push_back(eps_min);
    return s;
}

std::vector<double> log_masses(const ScalarField& rho) {
    const double w = rho.grid.cell_volume();
    std::vector<double> masses(rho.v.size());
    for (std::size_t i = 0; i < rho.v.size(); ++i) {
        if (rho.v[i] < 0.0) throw std::invalid_argument("negative density");
        masses[i] = rho.v[i] * w;
    }
    const double total = pairwise_sum(masses);
    if (!(total > 0.0)) throw std::invalid_argument("density has zero mass");
    std::vector<double> lm(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i)
        lm[i] = masses[i] > 0.0 ? std::log(masses[i] / total) : -std::numeric_limits<double>::infinity();
    return lm;
}

} // namespace detail

std::vector<std::uint8_t> support_mask(const ScalarField& rho) {
    double mx = 0.0;
    for (double x : rho.v) mx = std::max(mx, x);
    std::vector<std::uint8_t> m(rho.v.size(), 0);
    for (std::size_t i = 0; i < rho.v.size(); ++i) m[i] = rho.v[i] > 1e-10 * mx ? 1 : 0;
    return m;
}

double w2_exact_1d(const ScalarField& rho, const ScalarField& sigma) {
    const Grid& g = rho.grid;
    if (g.dim != 1) throw std::invalid_argument("w2_exact_1d: grid must be 1D");
    if (!(sigma.grid == g)) throw std::invalid_argument("w2_exact_1d: grids differ");
    const int n = g.n[0];
    const double dx = g.dx(0);

    auto prefix = [&](const ScalarField& f) {
        std::vector<double> A(std::size_t(n) + 1, 0.0);
        for (int i = 0; i < n; ++i) {
            if (f[i] < 0.0) throw std::invalid_argument("w2_exact_1d: negative density");
            A[std::size_t(i) + 1] = A[std::size_t(i)] + f[i] * dx;
        }
        return A;
    };
    std::vector<double> A = prefix(rho), B = prefix(sigma);
    const double ma = A[std::size_t(n)], mb = B[std::size_t(n)];
    if (std::abs(ma - 1.0) > 1e-10 || std::abs(mb - 1.0) > 1e-10 || std::abs(ma - mb) > 1e-12)
        throw std::invalid_argument("w2_exact_1d: mass mismatch (need unit masses)");
    const double mtot = std::min(ma, mb);

    // quantile of the piecewise-constant density: linear on each cell's mass range
    auto quantile = [&](const std::vector<double>& P, const ScalarField& f, int& cell, double s) {
        while (cell < n - 1 && P[std::size_t(cell) + 1] <= s) ++cell;
        while (cell > 0 && P[std::size_t(cell)] > s) --cell;
        const double mcell = f[cell] * dx;
        if (mcell <= 0.0) return g.lo[0] + cell * dx;
        double x = g.lo[0] + cell * dx + (s - P[std::size_t(cell)]) / mcell * dx;
        return std::min(std::max(x, g.lo[0]), g.hi[0]);
    };

    double total = 0.0;
    int ia = 0, ib = 0, qa = 0, qb = 0;
    double s = 0.0;
    while (s < mtot - 1e-15) {
        while (ia < n - 1 && A[std::size_t(ia) + 1] <= s + 1e-18) ++ia;
        while (ib < n - 1 && B[std::size_t(ib) + 1] <= s + 1e-18) ++ib;
        double s_next = std::min({A[std::size_t(ia) + 1], B[std::size_t(ib) + 1], mtot});
        if (!(s_next > s)) break;
        const double sm = 0.5 * (s + s_next);
        auto gq = [&](double t) {
            const double d = quantile(A, rho, qa, t) - quantile(B, sigma, qb, t);
            return d * d;
        };
        // integrand is quadratic on the segment: Simpson is exact
        total += (s_next - s) / 6.0 * (gq(s) + 4.0 * gq(sm) + gq(s_next));
        s = s_next;
    }
    return total;
}

namespace {

struct SinkhornState {
    std::vector<double> a;       // exponent-units input buffer
    std::vector<double> out;     // softmin output
    std::vector<double> scratch; // ping-pong buffer for d>1
};

// out_i = LSE_j(lw_j + pot_j/eps - c_ij/eps)
void softmin(const Grid& g, const std::vector<const double*>& tbls, const std::vector<double>& lw,
             const std::vector<double>& pot, double eps, SinkhornState& st, std::vector<double>& res) {
    const std::size_t nc = lw.size();
    st.a.resize(nc);
    for (std::size_t i = 0; i < nc; ++i) st.a[i] = lw[i] + pot[i] / eps;
    kernels::softmin_grid(g, tbls, st.a, st.out, st.scratch);
    res = st.out;
}

} // namespace

TransportResult sinkhorn(const ScalarField& rho, const ScalarField& sigma, const EntropicParams& params) {
    const Grid& g = rho.grid;
    if (!(sigma.grid == g)) throw std::invalid_argument("sinkhorn: grids differ");
    const EntropicParams P = params.resolved(g);
    const std::size_t nc = std::size_t(g.cells());

    const std::vector<double> lp = detail::log_masses(rho);
    const std::vector<double> lq = detail::log_masses(sigma);
    std::vector<double> Q(nc);
    for (std::size_t j = 0; j < nc; ++j) Q[j] = std::isinf(lq[j]) ? 0.0 : std::exp(lq[j]);

    std::vector<double> u(nc, 0.0), v(nc, 0.0), vhat(nc);
    SinkhornState st;
    const auto schedule = detail::eps_schedule(P.eps0, P.eps_min, P.gamma);

    int total_sweeps = 0;
    double err = std::numeric_limits<double>::infinity();
    double eps = schedule.back();
    for (std::size_t lev = 0; lev < schedule.size(); ++lev) {
        eps = schedule[lev];
        const bool final_level = lev + 1 == schedule.size();
        const double tol = final_level ? P.tol_marginal : std::max(P.tol_marginal, 1e-6);
        std::vector<std::vector<double>> tbls(std::size_t(g.dim));
        std::vector<const double*> tp(std::size_t(g.dim));
        for (int a = 0; a < g.dim; ++a) {
            tbls[std::size_t(a)] = kernels::axis_cost_table(g, a, eps);
            tp[std::size_t(a)] = tbls[std::size_t(a)].data();
        }
        const int cap = final_level ? P.max_sweeps : 60;
        for (int sweep = 0; sweep < cap; ++sweep) {
            softmin(g, tp, lq, v, eps, st, u);
            for (std::size_t i = 0; i < nc; ++i) u[i] = -eps * u[i];
            softmin(g, tp, lp, u, eps, st, vhat);
            for (std::size_t j = 0; j < nc; ++j) vhat[j] = -eps * vhat[j];
            ++total_sweeps;
            std::vector<double> e(nc, 0.0);
            for (std::size_t j = 0; j < nc; ++j)
                if (Q[j] > 0.0) e[j] = Q[j] * std::abs(std::expm1((v[j] - vhat[j]) / eps));
            err = pairwise_sum(e);
            if (err <= tol) break;
            v = vhat;
        }
        for (std::size_t i = 0; i < nc; ++i)
            if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
                throw TransportError("sinkhorn: kernel overflow, increase eps0 (log-domain updates are "
                                     "mandatory below eps = 10*dx^2)",
                                     err);
        if (final_level && err > P.tol_marginal)
            throw TransportError("sinkhorn: marginal tolerance not reached within max_sweeps", err);
    }

    TransportResult res;
    res.rho = rho;
    res.potentials.eps = eps;
    res.potentials.u = ScalarField(g);
    res.potentials.v = ScalarField(g);
    res.potentials.u.v = u;
    res.potentials.v.v = v;
    res.marginal_error = err;
    res.sweeps = total_sweeps;

    std::vector<double> ax(nc), ay(nc);
    for (std::size_t i = 0; i < nc; ++i) ax[i] = lp[i] + u[i] / eps;
    for (std::size_t j = 0; j < nc; ++j) ay[j] = lq[j] + v[j] / eps;
    const auto scan = kernels::plan_scan(g, ax, ay, eps);
    res.w2_squared = std::max(0.0, scan.bary_cost);

    std::vector<double> du(nc, 0.0), dv(nc, 0.0);
    for (std::size_t i = 0; i < nc; ++i)
        if (!std::isinf(lp[i])) du[i] = std::exp(lp[i]) * u[i];
    for (std::size_t j = 0; j < nc; ++j)
        if (!std::isinf(lq[j])) dv[j] = std::exp(lq[j]) * v[j];
    res.w2_dual = 2.0 * (pairwise_sum(du) + pairwise_sum(dv));

    if (P.debias) {
        EntropicParams pd = P;
        pd.debias = false;
        const double s1 = sinkhorn(rho, rho, pd).w2_squared;
        const double s2 = sinkhorn(sigma, sigma, pd).w2_squared;
        res.w2_debiased = res.w2_squared - 0.5 * s1 - 0.5 * s2;
    }
    return res;
}

ScalarField kantorovich_potential(const TransportResult& res, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("kantorovich_potential: h must be > 0");
    const ScalarField& rho = res.rho;
    ScalarField phi(rho.grid);
    for (std::int64_t i = 0; i < rho.size(); ++i) phi[i] = res.potentials.u[i] / h;
    const auto supp = support_mask(rho);
    std::vector<double> wnum(rho.v.size(), 0.0), wden(rho.v.size(), 0.0);
    for (std::size_t i = 0; i < rho.v.size(); ++i) {
        if (!supp[i]) continue;
        wnum[i] = rho.v[i] * phi[std::int64_t(i)];
        wden[i] = rho.v[i];
    }
    const double den = pairwise_sum(wden);
    const double mean = den > 0.0 ? pairwise_sum(wnum) / den : 0.0;
    for (double& x : phi.v) x -= mean;
    return phi;
}

} // namespace verigin
