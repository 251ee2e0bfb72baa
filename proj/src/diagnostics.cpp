#include "verigin/diagnostics.hpp"

#include "verigin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace verigin {

namespace {
// 5-point Gauss-Legendre on [0,1]
constexpr double kGlNodes[5] = {0.04691007703066800, 0.23076534494715845, 0.5,
                                0.76923465505284155, 0.95308992296933200};
constexpr double kGlWeights[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                  0.23931433524968324, 0.11846344252809454};
} // namespace

CheckResult make_check(const std::string& name, std::int64_t step, double lhs, double rhs, double tol,
                       const std::string& note) {
    CheckResult c;
    c.name = name;
    c.step = step;
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.tol = tol;
    c.pass = c.slack >= -tol;
    c.note = note;
    return c;
}

bool TrajectoryReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

int TrajectoryReport::fail_count() const {
    int n = 0;
    for (const auto& c : checks)
        if (!c.pass) ++n;
    return n;
}

double entropic_allowance(double eps, std::int64_t cells) { return 2.0 * eps * std::log(double(cells)); }

double cert_tol(const Trajectory& traj) {
    const EntropicParams P = traj.cfg.entropic.resolved(traj.grid);
    return 10.0 * resolve_outer_tol(traj.cfg, traj.energy0.total) +
           entropic_allowance(P.eps_min, traj.grid.cells());
}

double dissipation_integral(const ScalarField& rho, const ScalarField& phi) {
    const VectorField gphi = gradient(phi);
    const Grid& g = rho.grid;
    std::vector<double> terms(rho.v.size());
    for (std::int64_t i = 0; i < rho.size(); ++i) {
        double s = 0.0;
        for (int a = 0; a < g.dim; ++a) s += gphi.at(a, i) * gphi.at(a, i);
        terms[std::size_t(i)] = rho[i] * s;
    }
    return pairwise_sum(terms) * g.cell_volume();
}

double cert_step_w2sq(const Trajectory& traj, std::int64_t n) {
    const StepResult& s = traj.steps[std::size_t(n - 1)];
    if (traj.grid.dim == 1) return w2_exact_1d(s.rho, traj.rho_at_step(n - 1));
    const double h = traj.cfg.h;
    return h * h * dissipation_integral(s.rho, s.phi);
}

std::vector<CheckResult> check_dissipation(const Trajectory& traj) {
    std::vector<CheckResult> out;
    if (traj.steps.empty()) return out;
    const double tol = cert_tol(traj);
    const double inv2h = 0.5 / traj.cfg.h;
    double acc = 0.0, phib = 0.0;
    const auto N = std::int64_t(traj.steps.size());
    for (std::int64_t n = 1; n <= N; ++n) {
        const double w2 = cert_step_w2sq(traj, n);
        acc += inv2h * w2;
        phib += 0.5 * traj.cfg.h * dissipation_integral(traj.steps[std::size_t(n - 1)].rho,
                                                        traj.steps[std::size_t(n - 1)].phi);
        out.push_back(make_check("dissipation", n, inv2h * w2 + traj.energy_at_step(n),
                                 traj.energy_at_step(n - 1), tol));
    }
    out.push_back(make_check("dissipation_total", N, traj.energy_at_step(N) + acc, traj.energy0.total,
                             double(N) * tol));
    out.push_back(make_check("dissipation_phibound", N, phib, traj.energy0.total, double(N) * tol));
    return out;
}

std::vector<std::int64_t> sample_steps(std::int64_t nsteps, int count) {
    std::vector<std::int64_t> s;
    if (nsteps < 1 || count < 1) return s;
    std::set<std::int64_t> uniq;
    for (int k = 0; k < count; ++k) {
        const double f = count == 1 ? 1.0 : double(k) / double(count - 1);
        uniq.insert(1 + std::int64_t(std::llround(f * double(nsteps - 1))));
    }
    s.assign(uniq.begin(), uniq.end());
    return s;
}

std::vector<CheckResult> check_holder(const Trajectory& traj, int samples) {
    std::vector<CheckResult> out;
    const auto N = std::int64_t(traj.steps.size());
    if (N < 1) return out;
    // sample aligned times t = n h, including 0 and N
    std::set<std::int64_t> uniq;
    for (int k = 0; k < samples; ++k) {
        const double f = samples == 1 ? 1.0 : double(k) / double(samples - 1);
        uniq.insert(std::int64_t(std::llround(f * double(N))));
    }
    std::vector<std::int64_t> idx(uniq.begin(), uniq.end());
    const double E0 = traj.energy0.total;
    const bool exact = traj.grid.dim == 1;
    const EntropicParams P = traj.cfg.entropic.resolved(traj.grid);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const std::int64_t ns = idx[a], nt = idx[b];
            const double dt = double(nt - ns) * traj.cfg.h;
            double w2;
            std::string note;
            if (exact) {
                w2 = w2_exact_1d(traj.rho_at_step(nt), traj.rho_at_step(ns));
                note = "exact-1d";
            } else {
                EntropicParams q = P;
                w2 = sinkhorn(traj.rho_at_step(nt), traj.rho_at_step(ns), q).w2_squared;
                note = "entropic";
            }
            const double mult = 1.0 + 1e-6;
            double rhs = 2.0 * E0 * dt * mult * mult;
            if (!exact) rhs += entropic_allowance(P.eps_min, traj.grid.cells());
            out.push_back(make_check("holder", nt, w2, rhs, 0.0,
                                     note + " pair(" + std::to_string(ns) + "," + std::to_string(nt) + ")"));
        }
    }
    return out;
}

std::vector<CheckResult> check_optimality(const Trajectory& traj, std::int64_t step) {
    const StepResult& s = traj.steps[std::size_t(step - 1)];
    const double m = traj.cfg.energy.m;
    const auto supp = support_mask(s.rho);
    const std::size_t nc = s.rho.v.size();

    std::vector<double> r(nc, 0.0), wnum(nc, 0.0), wden(nc, 0.0);
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    for (std::size_t i = 0; i < nc; ++i) {
        if (!supp[i]) continue;
        const double fp = f_prime(s.rho.v[i], m);
        fmin = std::min(fmin, fp);
        fmax = std::max(fmax, fp);
        r[i] = fp - double(s.chi[std::int64_t(i)]) + s.phi[std::int64_t(i)];
        wnum[i] = s.rho.v[i] * r[i];
        wden[i] = s.rho.v[i];
    }
    const double den = pairwise_sum(wden);
    const double c = pairwise_sum(wnum) / den;
    std::vector<double> var(nc, 0.0);
    for (std::size_t i = 0; i < nc; ++i)
        if (supp[i]) var[i] = s.rho.v[i] * (r[i] - c) * (r[i] - c);
    const double sd = std::sqrt(pairwise_sum(var) / den);
    const double scale = std::max(fmax - fmin, 1e-12);

    const EntropicParams P = traj.cfg.entropic.resolved(traj.grid);
    const double tol_fac = 1e-2 + P.eps_min / traj.cfg.h;
    std::vector<CheckResult> out;
    out.push_back(make_check("optimality_std", step, sd, tol_fac * scale, 0.0,
                             "scale=" + std::to_string(scale)));

    // outside supp: f'(rho) - chi + phi >= c up to slack (spec design decision: 1e-3)
    double worst = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < nc; ++i) {
        if (supp[i]) continue;
        any = true;
        if (s.rho.v[i] <= 0.0 && m == 1.0) continue; // -inf sentinel cells excluded
        const double val = f_prime(s.rho.v[i], m) - double(s.chi[std::int64_t(i)]) + s.phi[std::int64_t(i)];
        worst = std::min(worst, val - c);
    }
    if (!any || !std::isfinite(worst))
        out.push_back(make_check("optimality_outside", step, 0.0, 0.0, 1e-3, "vacuous (full support)"));
    else
        out.push_back(make_check("optimality_outside", step, -worst, 0.0, 1e-3));
    return out;
}

double jump_residual(const ScalarField& rho, const PhaseField& chi, double m, std::int64_t* count_out) {
    const auto faces = jump_faces(chi);
    const auto supp = support_mask(rho);
    double worst = 0.0;
    std::int64_t count = 0;
    for (const auto& fc : faces) {
        if (!supp[std::size_t(fc.cell_minus)] || !supp[std::size_t(fc.cell_plus)]) continue;
        ++count;
        const double r = f_prime(rho[fc.cell_plus], m) - f_prime(rho[fc.cell_minus], m) + 1.0;
        worst = std::max(worst, std::abs(r));
    }
    if (count_out) *count_out = count;
    return worst;
}

CheckResult check_jump(const Trajectory& traj, std::int64_t step) {
    const StepResult& s = traj.steps[std::size_t(step - 1)];
    std::int64_t count = 0;
    const double worst = jump_residual(s.rho, s.chi, traj.cfg.energy.m, &count);
    return make_check("jump", step, worst, 0.0, 0.25,
                      count == 0 ? "vacuous (no interface)" : "faces=" + std::to_string(count));
}

std::vector<PhaseField> seeded_competitors(const Grid& g, const PhaseField& chi_n, int count,
                                           std::uint64_t seed) {
    std::vector<PhaseField> out;
    out.push_back(PhaseField(g, 0));
    out.push_back(PhaseField(g, 1));
    out.push_back(chi_n);
    PhaseField comp(g, 0);
    for (std::int64_t i = 0; i < chi_n.size(); ++i) comp[i] = chi_n[i] ? 0 : 1;
    out.push_back(comp);
    Rng rng(seed);
    while (int(out.size()) < count) {
        PhaseField c(g, 0);
        const int boxes = 1 + int(rng.index(3));
        for (int b = 0; b < boxes; ++b) {
            std::array<double, 3> lo{}, hi{};
            for (int a = 0; a < g.dim; ++a) {
                const double x0 = rng.uniform(g.lo[a], g.hi[a]);
                const double x1 = rng.uniform(g.lo[a], g.hi[a]);
                lo[a] = std::min(x0, x1);
                hi[a] = std::max(x0, x1);
            }
            for (std::int64_t i = 0; i < c.size(); ++i) {
                const auto p = g.point(i);
                bool in = true;
                for (int a = 0; a < g.dim; ++a) in = in && p[a] >= lo[a] && p[a] < hi[a];
                if (in) c[i] = 1;
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

CheckResult check_almost_minimizing(const Trajectory& traj, std::int64_t step,
                                    const std::vector<PhaseField>& competitors, double extra_tol) {
    const StepResult& s = traj.steps[std::size_t(step - 1)];
    const Grid& g = traj.grid;
    const double w = g.cell_volume();
    const double lam = traj.cfg.energy.lambda;
    const double sig = traj.cfg.energy.sigma;

    auto half = [&](const PhaseField& chi) { // sigma P(chi) - int chi rho
        std::vector<double> t(s.rho.v.size(), 0.0);
        for (std::int64_t i = 0; i < s.rho.size(); ++i)
            if (chi[i]) t[std::size_t(i)] = s.rho[i];
        return sig * perimeter(chi) - pairwise_sum(t) * w;
    };
    const double lhs0 = half(s.chi);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& comp : competitors) {
        std::vector<double> dv(s.rho.v.size(), 0.0);
        for (std::int64_t i = 0; i < s.rho.size(); ++i)
            dv[std::size_t(i)] = std::abs(double(comp[i]) - double(s.chi[i]));
        const double sym = pairwise_sum(dv) * w;
        const double rhs = half(comp) + lam * sym;
        const double scale = 1.0 + std::abs(lhs0) + std::abs(rhs);
        worst = std::max(worst, (lhs0 - rhs) / scale);
    }
    return make_check("almost_min", step, worst, 0.0, 1e-9 + extra_tol,
                      "normalized worst violation over " + std::to_string(competitors.size()) +
                          " competitors");
}

CheckResult check_degiorgi(const ScalarField& rho_prev, const PhaseField& chi_prev, const StepConfig& cfg) {
    const Grid& g = rho_prev.grid;
    const double h = cfg.h;
    const StepResult full = jko_step(rho_prev, chi_prev, cfg);
    const double e_prev = total_energy(rho_prev, chi_prev, cfg.energy).total;

    const double w2_full = g.dim == 1 ? w2_exact_1d(full.rho, rho_prev)
                                      : h * h * dissipation_integral(full.rho, full.phi);
    double integral = 0.0;
    for (int q = 0; q < 5; ++q) {
        const double t = h * kGlNodes[q];
        const StepResult interp = degiorgi_interpolate(rho_prev, chi_prev, t, cfg);
        const double w2t = g.dim == 1 ? w2_exact_1d(interp.rho, rho_prev)
                                      : t * t * dissipation_integral(interp.rho, interp.phi);
        integral += h * kGlWeights[q] * w2t / (t * t);
    }
    const double lhs = 0.5 * w2_full / h + 0.5 * integral;
    const double rhs = e_prev - full.energy.total;

    double sum_wt = 0.0;
    for (int q = 0; q < 5; ++q) sum_wt += kGlWeights[q] / (kGlNodes[q] * kGlNodes[q]);
    const EntropicParams P = cfg.entropic.resolved(g);
    const double tol = (10.0 * resolve_outer_tol(cfg, e_prev) + entropic_allowance(P.eps_min, g.cells())) *
                       (1.0 + 0.5 * sum_wt);
    return make_check("degiorgi", -1, lhs, rhs, tol, g.dim == 1 ? "exact-1d" : "entropic-gradient (advisory)");
}

ElResidual euler_lagrange_residual(const ScalarField& rho, const PhaseField& chi, const ScalarField& phi,
                                   const EnergyParams& p, const SmoothField& xi, bool wrong_exponent) {
    const Grid& g = rho.grid;
    const double w = g.cell_volume();
    const double mexp = wrong_exponent ? p.m + 1.0 : p.m;
    const VectorField gphi = gradient(phi);

    std::vector<double> tl(rho.v.size()), tr(rho.v.size());
    for (std::int64_t i = 0; i < rho.size(); ++i) {
        const auto pt = g.point(i);
        const auto xv = xi.value(pt);
        const auto gd = xi.grad_diag(pt);
        double dot = 0.0, div = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            dot += gphi.at(a, i) * xv[std::size_t(a)];
            div += gd[std::size_t(a)];
        }
        tl[std::size_t(i)] = -rho[i] * dot;
        tr[std::size_t(i)] = (-std::pow(rho[i], mexp) + (chi[i] ? p.lambda : 0.0)) * div;
    }
    ElResidual r;
    r.lhs = pairwise_sum(tl) * w;
    r.rhs = pairwise_sum(tr) * w;

    // interface term with axis-aligned face normals (vanishes identically in 1D)
    if (g.dim > 1) {
        double iface = 0.0;
        for (const auto& fc : jump_faces(chi)) {
            auto pt = g.point(std::min(fc.cell_minus, fc.cell_plus));
            pt[fc.axis] += 0.5 * g.dx(fc.axis);
            const auto gd = xi.grad_diag(pt);
            double tangential = 0.0;
            for (int a = 0; a < g.dim; ++a)
                if (a != fc.axis) tangential += gd[std::size_t(a)];
            iface += g.face_area(fc.axis) * tangential;
        }
        r.rhs += p.sigma * iface;
    }
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

SmoothField windowed_sine_field(const Grid& g, int k) {
    const double a = g.lo[0], b = g.hi[0];
    const double L = b - a;
    const double pi = std::acos(-1.0);
    SmoothField f;
    f.value = [a, L, k, pi](std::array<double, 3> p) {
        const double x = (p[0] - a) / L;
        const double win = std::sin(pi * x) * std::sin(pi * x);
        return std::array<double, 3>{std::sin(k * pi * x) * win, 0.0, 0.0};
    };
    f.grad_diag = [a, L, k, pi](std::array<double, 3> p) {
        const double x = (p[0] - a) / L;
        const double win = std::sin(pi * x) * std::sin(pi * x);
        const double dwin = 2.0 * pi * std::sin(pi * x) * std::cos(pi * x);
        const double d = (k * pi * std::cos(k * pi * x) * win + std::sin(k * pi * x) * dwin) / L;
        return std::array<double, 3>{d, 0.0, 0.0};
    };
    return f;
}

CheckResult check_euler_lagrange(const Trajectory& traj, std::int64_t step, const SmoothField& xi) {
    const StepResult& s = traj.steps[std::size_t(step - 1)];
    const ElResidual r = euler_lagrange_residual(s.rho, s.chi, s.phi, traj.cfg.energy, xi);
    const EntropicParams P = traj.cfg.entropic.resolved(traj.grid);
    double dxmax = 0.0;
    for (int a = 0; a < traj.grid.dim; ++a) dxmax = std::max(dxmax, traj.grid.dx(a));
    const double tol = 10.0 * (dxmax + std::sqrt(P.eps_min)) * (1.0 + std::abs(r.lhs) + std::abs(r.rhs));
    return make_check("euler_lagrange", step, r.residual, 0.0, tol);
}

CheckResult check_optimal_dissipation(const Trajectory& traj, const SmoothField& xi) {
    const Grid& g = traj.grid;
    const double w = g.cell_volume();
    const double h = traj.cfg.h;
    const auto N = std::int64_t(traj.steps.size());
    const EnergyParams& p = traj.cfg.energy;

    double acc = 0.0;
    for (std::int64_t n = 1; n <= N; ++n) {
        const StepResult& s = traj.steps[std::size_t(n - 1)];
        const double diss = dissipation_integral(s.rho, s.phi);
        std::vector<double> txi(s.rho.v.size()), tdiv(s.rho.v.size());
        for (std::int64_t i = 0; i < s.rho.size(); ++i) {
            const auto pt = g.point(i);
            const auto xv = xi.value(pt);
            const auto gd = xi.grad_diag(pt);
            double n2 = 0.0, div = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                n2 += xv[std::size_t(a)] * xv[std::size_t(a)];
                div += gd[std::size_t(a)];
            }
            txi[std::size_t(i)] = s.rho[i] * n2;
            tdiv[std::size_t(i)] = (std::pow(s.rho[i], p.m) - (s.chi[i] ? p.lambda : 0.0)) * div;
        }
        double iface = 0.0;
        for (const auto& fc : jump_faces(s.chi)) {
            auto pt = g.point(std::min(fc.cell_minus, fc.cell_plus));
            pt[fc.axis] += 0.5 * g.dx(fc.axis);
            const auto gd = xi.grad_diag(pt);
            double tang = 0.0;
            for (int a = 0; a < g.dim; ++a)
                if (a != fc.axis) tang += gd[std::size_t(a)];
            iface += g.face_area(fc.axis) * tang;
        }
        acc += h * (0.5 * diss - 0.5 * pairwise_sum(txi) * w - p.sigma * iface + pairwise_sum(tdiv) * w);
    }
    const double lhs = traj.energy_at_step(N) + acc;
    const double rhs = traj.energy0.total;
    const EntropicParams P = traj.cfg.entropic.resolved(g);
    double dxmax = 0.0;
    for (int a = 0; a < g.dim; ++a) dxmax = std::max(dxmax, g.dx(a));
    const double T = double(N) * h;
    const double tol = double(N) * cert_tol(traj) + 10.0 * T * (dxmax + std::sqrt(P.eps_min));
    return make_check("optimal_dissipation", -1, lhs, rhs, tol);
}

double transport_residual(const Trajectory& traj, const SpaceTimeField& eta) {
    const Grid& g = traj.grid;
    const double w = g.cell_volume();
    const double h = traj.cfg.h;
    const auto N = std::int64_t(traj.steps.size());
    double acc = 0.0;
    for (std::int64_t n = 1; n <= N; ++n) {
        const StepResult& s = traj.steps[std::size_t(n - 1)];
        const VectorField gphi = gradient(s.phi);
        const double tn = double(n) * h;
        std::vector<double> terms(s.rho.v.size());
        for (std::int64_t i = 0; i < s.rho.size(); ++i) {
            const auto pt = g.point(i);
            const auto ge = eta.grad(pt, tn);
            double adv = 0.0;
            for (int a = 0; a < g.dim; ++a) adv += gphi.at(a, i) * ge[std::size_t(a)];
            terms[std::size_t(i)] = s.rho[i] * (eta.dt(pt, tn) + adv);
        }
        acc += h * pairwise_sum(terms) * w;
    }
    std::vector<double> t0(traj.rho0.v.size());
    for (std::int64_t i = 0; i < traj.rho0.size(); ++i)
        t0[std::size_t(i)] = traj.rho0[i] * eta.value(g.point(i), 0.0);
    return -acc - pairwise_sum(t0) * w;
}

std::vector<CheckResult> check_transport_residual(const Trajectory& traj) {
    std::vector<CheckResult> out;
    const auto N = std::int64_t(traj.steps.size());
    if (N < 1) return out;
    const double T = double(N) * traj.cfg.h;
    const double pi = std::acos(-1.0);
    const Grid& g = traj.grid;

    SpaceTimeField constant;
    constant.value = [T](std::array<double, 3>, double t) { return 1.0 - t / T; };
    constant.dt = [T](std::array<double, 3>, double) { return -1.0 / T; };
    constant.grad = [](std::array<double, 3>, double) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
    out.push_back(make_check("transport_mass", -1, std::abs(transport_residual(traj, constant)), 0.0, 1e-9,
                             "constant-in-space eta"));

    SpaceTimeField sine;
    const double a = g.lo[0], L = g.hi[0] - g.lo[0];
    sine.value = [T, a, L, pi](std::array<double, 3> p, double t) {
        return std::sin(pi * (p[0] - a) / L) * (1.0 - t / T);
    };
    sine.dt = [T, a, L, pi](std::array<double, 3> p, double) { return -std::sin(pi * (p[0] - a) / L) / T; };
    sine.grad = [T, a, L, pi](std::array<double, 3> p, double t) {
        return std::array<double, 3>{pi / L * std::cos(pi * (p[0] - a) / L) * (1.0 - t / T), 0.0, 0.0};
    };
    const double r = std::abs(transport_residual(traj, sine));
    const EntropicParams P = traj.cfg.entropic.resolved(g);
    double dxmax = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) dxmax = std::max(dxmax, g.dx(ax));
    const double tol = 10.0 * (traj.cfg.h + dxmax + std::sqrt(P.eps_min));
    out.push_back(make_check("transport_sine", -1, r, 0.0, tol, "separable eta, trend-tested in acceptance"));
    return out;
}

StabilityRow stability_report(const Trajectory& traj, std::int64_t n, std::int64_t k) {
    const Grid& g = traj.grid;
    const double w = g.cell_volume();
    const double m = traj.cfg.energy.m;
    const int d = g.dim;
    const double beta = d >= 2 ? double(d) / double(d - 1) : 2.0;
    const double gam = d >= 2 ? double(d) / (2.0 * double(d - 1)) : 1.0;
    const double p = m <= 2.0 ? 1.0 : m / 2.0;

    const ScalarField& ra = traj.rho_at_step(n);
    const ScalarField& rb = traj.rho_at_step(n + k);
    const PhaseField& ca = traj.chi_at_step(n);
    const PhaseField& cb = traj.chi_at_step(n + k);

    StabilityRow row;
    row.n = n;
    row.k = k;
    std::vector<double> tl(ra.v.size()), tp(ra.v.size());
    for (std::int64_t i = 0; i < ra.size(); ++i) {
        const double mn = std::min({ra[i], rb[i], 1.0});
        tl[std::size_t(i)] = std::abs(double(ca[i]) - double(cb[i])) * std::pow(mn, beta);
        tp[std::size_t(i)] = std::pow(std::abs(ra[i] - rb[i]), p);
    }
    row.lhs = pairwise_sum(tl) * w;
    row.lp_norm = std::pow(pairwise_sum(tp) * w, 1.0 / p);
    double da = 0.0, db = 0.0;
    if (n >= 1) da = dissipation_integral(traj.steps[std::size_t(n - 1)].rho, traj.steps[std::size_t(n - 1)].phi);
    db = dissipation_integral(traj.steps[std::size_t(n + k - 1)].rho, traj.steps[std::size_t(n + k - 1)].phi);
    row.dissipation = da + db;
    const double denom = row.lp_norm + std::pow(row.lp_norm, gam) * std::pow(row.dissipation, gam);
    row.ratio = denom > 0.0 ? row.lhs / denom : (row.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return row;
}

double alpha_d(int d) {
    if (d < 2) throw std::domain_error("alpha_d: d must be >= 2");
    const double dd = double(d);
    const double a = (dd + 1.0) / (2.0 * dd) * std::pow((dd - 1.0) / (2.0 * dd), (dd - 1.0) / (dd + 1.0));
    if (!(a > 0.0 && a < 1.0)) throw std::runtime_error("alpha_d: value out of (0,1)");
    return a;
}

std::vector<double> muckenhoupt_default_radii(const Grid& g, int count) {
    double dxmax = 0.0, diam2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        dxmax = std::max(dxmax, g.dx(a));
        diam2 += (g.hi[a] - g.lo[a]) * (g.hi[a] - g.lo[a]);
    }
    const double r0 = 2.0 * dxmax, r1 = std::sqrt(diam2);
    std::vector<double> radii;
    for (int k = 0; k < count; ++k) {
        const double f = count == 1 ? 1.0 : double(k) / double(count - 1);
        radii.push_back(r0 * std::pow(r1 / r0, f));
    }
    return radii;
}

ScalarField muckenhoupt_weight(const ScalarField& rho) {
    const int d = rho.grid.dim;
    const double beta = d >= 2 ? double(d) / double(d - 1) : 2.0;
    ScalarField w(rho.grid);
    for (std::int64_t i = 0; i < rho.size(); ++i) w[i] = std::pow(std::min(rho[i], 1.0), beta);
    return w;
}

double muckenhoupt_a1(const ScalarField& w, const std::vector<double>& radii) {
    const Grid& g = w.grid;
    const std::int64_t nc = g.cells();
    const auto npts = std::size_t(nc);
    std::vector<std::array<double, 3>> pts(npts);
    for (std::int64_t i = 0; i < nc; ++i) pts[std::size_t(i)] = g.point(i);
    double cw = 1.0;
    for (double r : radii) {
        const double r2 = r * r;
        for (std::int64_t c = 0; c < nc; ++c) {
            double sum = 0.0, mn = std::numeric_limits<double>::infinity();
            std::int64_t cnt = 0;
            for (std::int64_t i = 0; i < nc; ++i) {
                double d2 = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    const double dd = pts[std::size_t(i)][a] - pts[std::size_t(c)][a];
                    d2 += dd * dd;
                }
                if (d2 > r2) continue;
                sum += w[i];
                mn = std::min(mn, w[i]);
                ++cnt;
            }
            if (cnt == 0 || !(mn > 0.0)) continue;
            cw = std::max(cw, sum / double(cnt) / mn);
        }
    }
    return cw;
}

TrajectoryReport run_diagnostics(const Trajectory& traj, const DiagnosticsConfig& dcfg) {
    TrajectoryReport rep;
    rep.w2_method = traj.grid.dim == 1 ? "exact-1d" : "entropic-gradient";
    const auto N = std::int64_t(traj.steps.size());
    if (N == 0) return rep;

    if (dcfg.dissipation) {
        auto cs = check_dissipation(traj);
        rep.checks.insert(rep.checks.end(), cs.begin(), cs.end());
    }
    if (dcfg.holder) {
        auto cs = check_holder(traj, dcfg.holder_samples);
        rep.checks.insert(rep.checks.end(), cs.begin(), cs.end());
    }
    if (dcfg.optimality)
        for (std::int64_t n = 1; n <= N; ++n) {
            auto cs = check_optimality(traj, n);
            rep.checks.insert(rep.checks.end(), cs.begin(), cs.end());
        }
    if (dcfg.jump)
        for (std::int64_t n = 1; n <= N; ++n) rep.checks.push_back(check_jump(traj, n));

    const auto sampled = sample_steps(N, dcfg.sampled_steps);
    if (dcfg.almost_min)
        for (auto n : sampled) {
            const auto comps = seeded_competitors(traj.grid, traj.steps[std::size_t(n - 1)].chi,
                                                  dcfg.almost_min_competitors, dcfg.seed + std::uint64_t(n));
            const double extra = traj.grid.dim >= 2 ? traj.cfg.pd_tol : 0.0;
            rep.checks.push_back(check_almost_minimizing(traj, n, comps, extra));
        }
    if (dcfg.euler_lagrange && traj.grid.dim == 1)
        for (auto n : sampled) rep.checks.push_back(check_euler_lagrange(traj, n, windowed_sine_field(traj.grid, 2)));
    if (dcfg.threshold_exactness && traj.grid.dim >= 2)
        for (std::int64_t n = 1; n <= N; ++n)
            rep.checks.push_back(make_check("threshold_exactness", n,
                                            traj.steps[std::size_t(n - 1)].stats.phase_thresholded_energy,
                                            traj.steps[std::size_t(n - 1)].stats.phase_relaxed_energy,
                                            traj.cfg.pd_tol));
    if (dcfg.degiorgi_steps > 0) {
        const auto K = std::min<std::int64_t>(N, dcfg.degiorgi_steps);
        for (std::int64_t n = 1; n <= K; ++n) {
            CheckResult c = check_degiorgi(traj.rho_at_step(n - 1), traj.chi_at_step(n - 1), traj.cfg);
            c.step = n;
            rep.checks.push_back(std::move(c));
        }
    }
    if (dcfg.optimal_dissipation)
        rep.checks.push_back(check_optimal_dissipation(traj, windowed_sine_field(traj.grid, 1)));
    if (dcfg.transport_residual) {
        auto cs = check_transport_residual(traj);
        rep.checks.insert(rep.checks.end(), cs.begin(), cs.end());
    }
    if (dcfg.stability)
        for (std::int64_t n = 0; n + 1 <= N; ++n) rep.stability.push_back(stability_report(traj, n, 1));
    if (dcfg.muckenhoupt)
        for (auto n : sampled) {
            const auto radii = muckenhoupt_default_radii(traj.grid, dcfg.muckenhoupt_radii);
            MuckenhouptRow row;
            row.step = n;
            row.c_w = muckenhoupt_a1(muckenhoupt_weight(traj.steps[std::size_t(n - 1)].rho), radii);
            rep.muckenhoupt.push_back(row);
        }
    return rep;
}

} // namespace verigin
