#include "verigin/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace verigin::kernels {

namespace {
int g_threads = 0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::int64_t kBlock = 64; // fixed row block for deterministic reductions
} // namespace

void set_threads(int t) { g_threads = t < 0 ? 0 : t; }
int threads() { return g_threads; }

void init_threads_from_env() {
    const char* e = std::getenv("VERIGIN_THREADS");
    set_threads(e ? std::atoi(e) : 0);
}

std::vector<double> axis_cost_table(const Grid& g, int axis, double eps) {
    const int n = g.n[axis];
    std::vector<double> tbl(std::size_t(n) * n);
    const double dx = g.dx(axis);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = (i - j) * dx;
            tbl[std::size_t(i) * n + j] = d * d / (2.0 * eps);
        }
    return tbl;
}

namespace {

// out[i] = LSE_j(in[j*stride] - tbl[i*n+j]) for one line; serial two-pass
inline double line_lse(const double* in, std::int64_t stride, int n, const double* tbl_row) {
    double m = kNegInf;
    for (int j = 0; j < n; ++j) {
        const double v = in[j * stride] - tbl_row[j];
        if (v > m) m = v;
    }
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::exp(in[j * stride] - tbl_row[j] - m);
    return m + std::log(s);
}

void softmin_axis(const Grid& g, int axis, const double* tbl, const std::vector<double>& in,
                  std::vector<double>& out) {
    const std::int64_t nc = g.cells();
    const int n = g.n[axis];
    const std::int64_t inner = g.stride(axis);
    const std::int64_t chunk = std::int64_t(n) * inner;
    const int T = threads();
#pragma omp parallel for schedule(static) num_threads(T > 1 ? T : 1) if (T > 1)
    for (std::int64_t idx = 0; idx < nc; ++idx) {
        const std::int64_t o = idx / chunk;
        const std::int64_t rem = idx % chunk;
        const std::int64_t i = rem / inner;
        const std::int64_t r = rem % inner;
        const double* base = in.data() + o * chunk + r;
        out[std::size_t(idx)] = line_lse(base, inner, n, tbl + i * n);
    }
}

} // namespace

void softmin_grid(const Grid& g, const std::vector<const double*>& tbls, const std::vector<double>& a,
                  std::vector<double>& out, std::vector<double>& scratch) {
    const std::size_t nc = std::size_t(g.cells());
    out.resize(nc);
    if (g.dim == 1) {
        softmin_axis(g, 0, tbls[0], a, out);
        return;
    }
    scratch.resize(nc);
    const std::vector<double>* src = &a;
    std::vector<double>* dst = (g.dim % 2 == 0) ? &scratch : &out;
    for (int axis = g.dim - 1; axis >= 0; --axis) {
        softmin_axis(g, axis, tbls[std::size_t(axis)], *src, *dst);
        src = dst;
        dst = (dst == &out) ? &scratch : &out;
    }
    // after dim passes the result sits in `out` by construction of the ping-pong
}

PlanScan plan_scan(const Grid& g, const std::vector<double>& ax, const std::vector<double>& ay,
                   double eps) {
    const std::int64_t nc = g.cells();
    PlanScan r;
    r.row_sums.assign(std::size_t(nc), 0.0);
    r.col_sums.assign(std::size_t(nc), 0.0);

    std::vector<std::vector<double>> tbls(std::size_t(g.dim));
    std::vector<const double*> tp(std::size_t(g.dim));
    for (int a = 0; a < g.dim; ++a) {
        tbls[std::size_t(a)] = axis_cost_table(g, a, eps);
        tp[std::size_t(a)] = tbls[std::size_t(a)].data();
    }

    const std::int64_t nblocks = (nc + kBlock - 1) / kBlock;
    const auto nb = std::size_t(nblocks);
    std::vector<std::vector<double>> bcol(nb);
    std::vector<double> bmass(nb, 0.0), bcost(nb, 0.0), bbary(nb, 0.0);

    const int n0 = g.n[0], n1 = g.dim > 1 ? g.n[1] : 1, n2 = g.dim > 2 ? g.n[2] : 1;
    const int T = threads();
#pragma omp parallel for schedule(static) num_threads(T > 1 ? T : 1) if (T > 1)
    for (std::int64_t b = 0; b < nblocks; ++b) {
        auto& cols = bcol[std::size_t(b)];
        cols.assign(std::size_t(nc), 0.0);
        double mass = 0.0, cost = 0.0, bary = 0.0;
        const std::int64_t i_end = std::min(nc, (b + 1) * kBlock);
        for (std::int64_t i = b * kBlock; i < i_end; ++i) {
            if (ax[std::size_t(i)] == kNegInf) continue;
            const auto ic = g.unflatten(i);
            const double* t0 = tp[0] + std::int64_t(ic[0]) * n0;
            double rs = 0.0, sy0 = 0.0, sy1 = 0.0, sy2 = 0.0;
            std::int64_t j = 0;
            for (int j0 = 0; j0 < n0; ++j0) {
                const double d0 = t0[j0];
                const double y0 = g.center(0, j0);
                for (int j1 = 0; j1 < n1; ++j1) {
                    const double d01 = g.dim > 1 ? d0 + tp[1][std::int64_t(ic[1]) * n1 + j1] : d0;
                    const double y1 = g.dim > 1 ? g.center(1, j1) : 0.0;
                    for (int j2 = 0; j2 < n2; ++j2, ++j) {
                        const double d = g.dim > 2 ? d01 + tp[2][std::int64_t(ic[2]) * n2 + j2] : d01;
                        const double L = ax[std::size_t(i)] + ay[std::size_t(j)] - d;
                        if (L < -745.0) continue; // exp underflows to 0
                        const double pi = std::exp(L);
                        rs += pi;
                        cols[std::size_t(j)] += pi;
                        mass += pi;
                        cost += pi * (2.0 * eps * d);
                        sy0 += pi * y0;
                        sy1 += pi * y1;
                        if (g.dim > 2) sy2 += pi * g.center(2, j2);
                    }
                }
            }
            r.row_sums[std::size_t(i)] = rs;
            if (rs > 0.0) {
                const double dx0 = g.center(0, ic[0]) - sy0 / rs;
                double b2 = dx0 * dx0;
                if (g.dim > 1) {
                    const double dx1 = g.center(1, ic[1]) - sy1 / rs;
                    b2 += dx1 * dx1;
                }
                if (g.dim > 2) {
                    const double dx2 = g.center(2, ic[2]) - sy2 / rs;
                    b2 += dx2 * dx2;
                }
                bary += rs * b2;
            }
        }
        bmass[std::size_t(b)] = mass;
        bcost[std::size_t(b)] = cost;
        bbary[std::size_t(b)] = bary;
    }
    for (std::int64_t b = 0; b < nblocks; ++b) {
        r.mass += bmass[std::size_t(b)];
        r.cost += bcost[std::size_t(b)];
        r.bary_cost += bbary[std::size_t(b)];
        const auto& cols = bcol[std::size_t(b)];
        for (std::int64_t j = 0; j < nc; ++j) r.col_sums[std::size_t(j)] += cols[std::size_t(j)];
    }
    return r;
}

} // namespace verigin::kernels
