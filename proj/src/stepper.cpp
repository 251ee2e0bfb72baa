#include "verigin/stepper.hpp"

#include "verigin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace verigin {

void StepConfig::validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("StepConfig: h must be > 0");
    energy.validate();
    if (outer_max < 1) throw std::invalid_argument("StepConfig: outer_max must be >= 1");
    if (outer_tol < 0.0) throw std::invalid_argument("StepConfig: outer_tol must be >= 0");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("StepConfig: newton_tol must be > 0");
    if (pd_max < 1) throw std::invalid_argument("StepConfig: pd_max must be >= 1");
    if (!(pd_tol > 0.0)) throw std::invalid_argument("StepConfig: pd_tol must be > 0");
}

double resolve_outer_tol(const StepConfig& cfg, double initial_energy) {
    return cfg.outer_tol > 0.0 ? cfg.outer_tol : 1e-9 * (1.0 + std::abs(initial_energy));
}

std::int64_t Trajectory::step_of_time(double t) const {
    if (t <= 0.0) return 0;
    auto n = std::int64_t(std::floor(t / cfg.h + 1e-12));
    return std::min(n, std::int64_t(steps.size()));
}

double kl_prox_log(double lkappa, int chi, double eta, double m, double newton_tol, int max_iters,
                   int* iters_out) {
    if (m == 1.0) {
        if (iters_out) *iters_out = 0;
        return (double(chi) - 1.0 + eta * lkappa) / (1.0 + eta);
    }
    const double a = m / (m - 1.0);
    auto F = [&](double t) { return a * std::exp((m - 1.0) * t) - double(chi) + eta * (t - lkappa); };
    auto Fp = [&](double t) { return m * std::exp((m - 1.0) * t) + eta; };

    // bracket the root of the increasing function F
    double tlo, thi;
    if (F(lkappa) >= 0.0) {
        thi = lkappa;
        double step = (1.0 + double(chi)) / eta + 1.0;
        tlo = lkappa - step;
        int guard = 0;
        while (F(tlo) > 0.0) {
            step *= 2.0;
            tlo -= step;
            if (++guard > 200) throw std::runtime_error("kl_prox_log: bracketing failed (lo)");
        }
    } else {
        tlo = lkappa;
        double step = (1.0 + double(chi)) / eta + 1.0;
        thi = lkappa + step;
        int guard = 0;
        while (F(thi) < 0.0) {
            step *= 2.0;
            thi += step;
            if (++guard > 200) throw std::runtime_error("kl_prox_log: bracketing failed (hi)");
        }
    }

    double t = std::clamp(lkappa, tlo, thi);
    for (int it = 1; it <= max_iters; ++it) {
        const double ft = F(t);
        if (ft > 0.0)
            thi = t;
        else
            tlo = t;
        double tn = t - ft / Fp(t);
        if (!(tn > tlo && tn < thi)) tn = 0.5 * (tlo + thi);
        const double dt = std::abs(tn - t);
        t = tn;
        if (dt <= newton_tol * (1.0 + std::abs(t))) {
            if (iters_out) *iters_out = it;
            return t;
        }
    }
    throw std::runtime_error("kl_prox_log: Newton did not converge in " + std::to_string(max_iters) +
                             " iterations");
}

namespace {

struct SolverBuffers {
    std::vector<double> a, out, scratch;
};

// out = LSE_j(lw_j + pot_j/eps - c/eps)
void softmin_into(const Grid& g, const std::vector<const double*>& tbls, const std::vector<double>& lw,
                  const std::vector<double>& pot, double eps, SolverBuffers& B, std::vector<double>& res) {
    const std::size_t nc = lw.size();
    B.a.resize(nc);
    for (std::size_t i = 0; i < nc; ++i) B.a[i] = lw[i] + pot[i] / eps;
    kernels::softmin_grid(g, tbls, B.a, B.out, B.scratch);
    res = B.out;
}

} // namespace

DensityResult solve_density(const ScalarField& rho_prev, const PhaseField& chi, const StepConfig& cfg) {
    cfg.validate();
    const Grid& g = rho_prev.grid;
    const EntropicParams P = cfg.entropic.resolved(g);
    const std::size_t nc = std::size_t(g.cells());
    const double w = g.cell_volume();
    const double logw = std::log(w);
    const double m = cfg.energy.m;

    const std::vector<double> lq = detail::log_masses(rho_prev);
    std::vector<double> Q(nc);
    for (std::size_t j = 0; j < nc; ++j) Q[j] = std::isinf(lq[j]) ? 0.0 : std::exp(lq[j]);

    std::vector<double> lp = lq, u(nc, 0.0), v(nc, 0.0), vhat(nc), lk(nc);
    // a cell with zero kernel image cannot happen (kernel strictly positive), but a
    // -inf in lp from zero-mass rho_prev cells is fine: they get mass after one prox
    for (std::size_t i = 0; i < nc; ++i)
        if (std::isinf(lp[i])) lp[i] = -745.0 + logw;

    SolverBuffers B;
    const auto schedule = detail::eps_schedule(P.eps0, P.eps_min, P.gamma);
    int total_sweeps = 0, newton_max = 0;
    double err = std::numeric_limits<double>::infinity();
    double eps = schedule.back();

    for (std::size_t lev = 0; lev < schedule.size(); ++lev) {
        eps = schedule[lev];
        const bool final_level = lev + 1 == schedule.size();
        const double tol = final_level ? P.tol_marginal : std::max(P.tol_marginal, 1e-6);
        const double eta = eps / cfg.h;
        std::vector<std::vector<double>> tbls(std::size_t(g.dim));
        std::vector<const double*> tp(std::size_t(g.dim));
        for (int a = 0; a < g.dim; ++a) {
            tbls[std::size_t(a)] = kernels::axis_cost_table(g, a, eps);
            tp[std::size_t(a)] = tbls[std::size_t(a)].data();
        }
        const int cap = final_level ? P.max_sweeps : 60;
        bool converged = false;
        for (int sweep = 0; sweep < cap; ++sweep) {
            // candidate source-side update and the L1 marginal error of the current state
            softmin_into(g, tp, lp, u, eps, B, vhat);
            for (std::size_t j = 0; j < nc; ++j) vhat[j] = -eps * vhat[j];
            std::vector<double> e(nc, 0.0);
            for (std::size_t j = 0; j < nc; ++j)
                if (Q[j] > 0.0) e[j] = Q[j] * std::abs(std::expm1((v[j] - vhat[j]) / eps));
            err = pairwise_sum(e);
            v = vhat;
            ++total_sweeps;
            if (sweep >= 1 && err <= tol) {
                converged = true;
                break;
            }
            // free-side update: KL-prox of the energy applied to the kernel image
            softmin_into(g, tp, lq, v, eps, B, lk);
            for (std::size_t i = 0; i < nc; ++i) {
                int it = 0;
                double ls;
                try {
                    ls = kl_prox_log(lk[i] - logw, int(chi[std::int64_t(i)]), eta, m, cfg.newton_tol, 100, &it);
                } catch (const std::runtime_error& ex) {
                    throw std::runtime_error("solve_density: " + std::string(ex.what()) + " at cell " +
                                             std::to_string(i));
                }
                newton_max = std::max(newton_max, it);
                lp[i] = ls + logw;
                u[i] = -eps * lk[i];
            }
        }
        for (std::size_t i = 0; i < nc; ++i)
            if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
                throw TransportError("solve_density: kernel overflow, increase eps0", err);
        if (final_level && !converged)
            throw TransportError("solve_density: marginal tolerance not reached within max_sweeps", err);
    }

    // final plan with exact source marginal; rho_n := its row marginal (mass exact)
    std::vector<double> ax(nc), ay(nc);
    for (std::size_t i = 0; i < nc; ++i) ax[i] = lp[i] + u[i] / eps;
    for (std::size_t j = 0; j < nc; ++j) ay[j] = lq[j] + v[j] / eps;
    const auto scan = kernels::plan_scan(g, ax, ay, eps);

    DensityResult res;
    res.rho = ScalarField(g);
    for (std::size_t i = 0; i < nc; ++i) res.rho.v[i] = scan.row_sums[i] / w;
    res.w2_squared = std::max(0.0, scan.bary_cost);
    res.marginal_error = err;
    res.sweeps = total_sweeps;
    res.newton_max_iters = newton_max;
    res.potentials.eps = eps;
    res.potentials.u = ScalarField(g);
    res.potentials.v = ScalarField(g);
    res.potentials.u.v = u;
    res.potentials.v.v = v;

    std::vector<double> du(nc), dv(nc, 0.0);
    for (std::size_t i = 0; i < nc; ++i) du[i] = scan.row_sums[i] * u[i];
    for (std::size_t j = 0; j < nc; ++j)
        if (Q[j] > 0.0) dv[j] = Q[j] * v[j];
    res.w2_dual = 2.0 * (pairwise_sum(du) + pairwise_sum(dv));

    TransportResult tr;
    tr.rho = res.rho;
    tr.potentials = res.potentials;
    res.phi = kantorovich_potential(tr, cfg.h);
    return res;
}

namespace {

PhaseResult solve_phase_dp_1d(const ScalarField& rho, const StepConfig& cfg) {
    const Grid& g = rho.grid;
    const int n = g.n[0];
    const double dx = g.dx(0);
    const double J = cfg.energy.sigma * g.face_area(0);
    auto cell_cost = [&](int i) { return (cfg.energy.lambda - rho[i]) * dx; };

    const auto ns = std::size_t(n);
    std::vector<double> c0(ns), c1(ns);
    std::vector<std::uint8_t> p0(ns, 0), p1(ns, 0);
    c0[0] = 0.0;
    c1[0] = cell_cost(0);
    for (int i = 1; i < n; ++i) {
        // ties prefer the chi=0 predecessor
        p0[std::size_t(i)] = (c0[std::size_t(i) - 1] <= c1[std::size_t(i) - 1] + J) ? 0 : 1;
        c0[std::size_t(i)] = std::min(c0[std::size_t(i) - 1], c1[std::size_t(i) - 1] + J);
        p1[std::size_t(i)] = (c0[std::size_t(i) - 1] + J <= c1[std::size_t(i) - 1]) ? 0 : 1;
        c1[std::size_t(i)] = cell_cost(i) + std::min(c0[std::size_t(i) - 1] + J, c1[std::size_t(i) - 1]);
    }
    PhaseResult res;
    res.chi = PhaseField(g, 0);
    int s = (c0[std::size_t(n) - 1] <= c1[std::size_t(n) - 1]) ? 0 : 1;
    const double best = std::min(c0[std::size_t(n) - 1], c1[std::size_t(n) - 1]);
    for (int i = n - 1; i >= 0; --i) {
        res.chi[i] = std::uint8_t(s);
        s = (s == 0) ? p0[std::size_t(i)] : p1[std::size_t(i)];
    }
    res.relaxed_energy = best;
    res.thresholded_energy = best;
    return res;
}

PhaseResult solve_phase_pd(const ScalarField& rho, const StepConfig& cfg) {
    const Grid& g = rho.grid;
    const std::int64_t nc = g.cells();
    const double w = g.cell_volume();

    const auto sz = std::size_t(nc);
    std::vector<double> c(sz);
    for (std::int64_t i = 0; i < nc; ++i) c[std::size_t(i)] = (cfg.energy.lambda - rho[i]) * w;

    // faces per axis, flattened as (cell index of the low side)
    struct AxisFaces {
        int axis;
        double weight; // sigma * face area
        std::vector<std::int64_t> lo;
    };
    std::vector<AxisFaces> faces;
    double L2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        AxisFaces af;
        af.axis = a;
        af.weight = cfg.energy.sigma * g.face_area(a);
        for (std::int64_t i = 0; i < nc; ++i)
            if (g.unflatten(i)[a] < g.n[a] - 1) af.lo.push_back(i);
        L2 += 4.0 * af.weight * af.weight;
        faces.push_back(std::move(af));
    }
    const double step = 0.99 / std::sqrt(L2);
    const double tau = step, sig = step;

    std::vector<double> u(sz, 0.5), ubar = u;
    std::vector<std::vector<double>> p(faces.size());
    for (std::size_t a = 0; a < faces.size(); ++a) p[a].assign(faces[a].lo.size(), 0.0);

    std::vector<double> div(sz);
    auto apply_divT = [&]() { // div[i] = (D^T p)_i
        std::fill(div.begin(), div.end(), 0.0);
        for (std::size_t a = 0; a < faces.size(); ++a) {
            const auto& af = faces[a];
            const std::int64_t s = g.stride(af.axis);
            for (std::size_t f = 0; f < af.lo.size(); ++f) {
                const double pf = af.weight * p[a][f];
                div[std::size_t(af.lo[f])] -= pf;
                div[std::size_t(af.lo[f] + s)] += pf;
            }
        }
    };

    auto primal = [&](const std::vector<double>& uu) {
        double tv = 0.0;
        for (const auto& af : faces) {
            const std::int64_t s = g.stride(af.axis);
            for (std::int64_t lo : af.lo) tv += af.weight * std::abs(uu[std::size_t(lo + s)] - uu[std::size_t(lo)]);
        }
        double lin = 0.0;
        for (std::int64_t i = 0; i < nc; ++i) lin += c[std::size_t(i)] * uu[std::size_t(i)];
        return tv + lin;
    };
    auto dual = [&]() {
        apply_divT();
        double dv = 0.0;
        for (std::int64_t i = 0; i < nc; ++i) dv += std::min(0.0, div[std::size_t(i)] + c[std::size_t(i)]);
        return dv;
    };

    PhaseResult res;
    double gap = std::numeric_limits<double>::infinity();
    int it = 0;
    while (it < cfg.pd_max) {
        for (std::size_t a = 0; a < faces.size(); ++a) {
            const auto& af = faces[a];
            const std::int64_t s = g.stride(af.axis);
            for (std::size_t f = 0; f < af.lo.size(); ++f) {
                const double grad = af.weight * (ubar[std::size_t(af.lo[f] + s)] - ubar[std::size_t(af.lo[f])]);
                p[a][f] = std::clamp(p[a][f] + sig * grad, -1.0, 1.0);
            }
        }
        apply_divT();
        for (std::int64_t i = 0; i < nc; ++i) {
            const double un = std::clamp(u[std::size_t(i)] - tau * (div[std::size_t(i)] + c[std::size_t(i)]), 0.0, 1.0);
            ubar[std::size_t(i)] = 2.0 * un - u[std::size_t(i)];
            u[std::size_t(i)] = un;
        }
        ++it;
        if (it % 32 == 0 || it == cfg.pd_max) {
            gap = primal(u) - dual();
            if (gap <= cfg.pd_tol) break;
        }
    }
    if (gap > cfg.pd_tol)
        throw std::runtime_error("solve_phase: primal-dual gap " + std::to_string(gap) +
                                 " not below tolerance after " + std::to_string(it) + " iterations");

    res.chi = PhaseField(g, 0);
    for (std::int64_t i = 0; i < nc; ++i) res.chi[i] = u[std::size_t(i)] > 0.5 ? 1 : 0;
    res.pd_iters = it;
    res.pd_gap = gap;
    res.relaxed_energy = primal(u);
    double lin = 0.0;
    for (std::int64_t i = 0; i < nc; ++i)
        if (res.chi[i]) lin += c[std::size_t(i)];
    res.thresholded_energy = cfg.energy.sigma * perimeter(res.chi) + lin;
    return res;
}

} // namespace

PhaseResult solve_phase(const ScalarField& rho, const StepConfig& cfg) {
    cfg.validate();
    for (double x : rho.v)
        if (x < 0.0) throw std::invalid_argument("solve_phase: negative density");
    if (rho.grid.dim == 1) return solve_phase_dp_1d(rho, cfg);
    return solve_phase_pd(rho, cfg);
}

StepResult jko_step(const ScalarField& rho_prev, const PhaseField& chi_prev, const StepConfig& cfg) {
    cfg.validate();
    const double e_prev = total_energy(rho_prev, chi_prev, cfg.energy).total;
    const double outer_tol = resolve_outer_tol(cfg, e_prev);
    const double inv2h = 0.5 / cfg.h;

    PhaseField chi = chi_prev;
    DensityResult dres;
    PhaseResult pres;
    StepResult out;
    out.stats.outer_objectives.clear();
    double obj_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    while (k < cfg.outer_max) {
        ++k;
        dres = solve_density(rho_prev, chi, cfg);
        pres = solve_phase(dres.rho, cfg);
        const bool chi_changed = !(pres.chi == chi);
        const double obj = inv2h * dres.w2_dual + total_energy(dres.rho, pres.chi, cfg.energy).total;
        out.stats.outer_objectives.push_back(obj);
        if (obj > obj_prev)
            out.stats.monotonicity_violation = std::max(out.stats.monotonicity_violation, obj - obj_prev);
        if (!chi_changed) break;
        const bool stalled = (obj_prev - obj < outer_tol) && k >= 2;
        chi = pres.chi;
        obj_prev = obj;
        if (stalled || k == cfg.outer_max) {
            // keep the (rho, phi) pair consistent with the accepted chi
            dres = solve_density(rho_prev, chi, cfg);
            out.stats.outer_stalled = stalled;
            out.stats.outer_converged = !(k == cfg.outer_max && !stalled);
            break;
        }
    }

    out.rho = std::move(dres.rho);
    out.chi = chi;
    out.phi = std::move(dres.phi);
    out.w2_squared = dres.w2_squared;
    out.energy = total_energy(out.rho, out.chi, cfg.energy);
    out.outer_iters = k;
    out.stats.sweeps = dres.sweeps;
    out.stats.marginal_error = dres.marginal_error;
    out.stats.newton_max_iters = dres.newton_max_iters;
    out.stats.pd_iters = pres.pd_iters;
    out.stats.pd_gap = pres.pd_gap;
    out.stats.phase_relaxed_energy = pres.relaxed_energy;
    out.stats.phase_thresholded_energy = pres.thresholded_energy;
    out.stats.w2_dual = dres.w2_dual;

    const double mass = integrate(out.rho);
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::runtime_error("jko_step: mass conservation violated: " + std::to_string(mass - 1.0));
    double mn = out.rho.v[0];
    for (double x : out.rho.v) mn = std::min(mn, x);
    if (!(mn > 0.0)) throw std::runtime_error("jko_step: positivity lost");
    return out;
}

Trajectory run_flow(const ScalarField& rho0, const PhaseField& chi0, double T, const StepConfig& cfg_in,
                    const StepCallback& on_step) {
    StepConfig cfg = cfg_in;
    cfg.validate();
    if (T < 0.0) throw std::invalid_argument("run_flow: T must be >= 0");
    const double mass0 = integrate(rho0);
    if (std::abs(mass0 - 1.0) > 1e-8)
        throw std::invalid_argument("run_flow: initial mass must be 1 (got " + std::to_string(mass0) + ")");
    check_finite(rho0, "run_flow rho0");

    Trajectory traj;
    traj.grid = rho0.grid;
    traj.rho0 = rho0;
    traj.chi0 = chi0;
    traj.energy0 = total_energy(rho0, chi0, cfg.energy);
    cfg.outer_tol = resolve_outer_tol(cfg, traj.energy0.total);
    traj.cfg = cfg;

    const auto nsteps = std::int64_t(std::floor(T / cfg.h + 1e-9));
    const ScalarField* rp = &traj.rho0;
    const PhaseField* cp = &traj.chi0;
    traj.steps.reserve(std::size_t(nsteps));
    for (std::int64_t n = 1; n <= nsteps; ++n) {
        StepResult s = jko_step(*rp, *cp, cfg);
        traj.steps.push_back(std::move(s));
        rp = &traj.steps.back().rho;
        cp = &traj.steps.back().chi;
        if (on_step) on_step(n, traj.steps.back());
    }
    return traj;
}

StepResult degiorgi_interpolate(const ScalarField& rho_prev, const PhaseField& chi_prev, double t,
                                const StepConfig& cfg) {
    if (!(t > 0.0 && t <= cfg.h + 1e-15))
        throw std::invalid_argument("degiorgi_interpolate: need 0 < t <= h");
    StepConfig c = cfg;
    c.h = t;
    return jko_step(rho_prev, chi_prev, c);
}

} // namespace verigin
