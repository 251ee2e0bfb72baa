#include "doctest.h"

#include "verigin/kernels.hpp"
#include "verigin/rng.hpp"

#include <cmath>

using namespace verigin;

namespace {

// reference LSE over the full grid, no separability tricks
std::vector<double> brute_softmin(const Grid& g, const std::vector<double>& a, double eps) {
    const std::int64_t nc = g.cells();
    std::vector<double> out(std::size_t(nc), 0.0);
    for (std::int64_t i = 0; i < nc; ++i) {
        const auto pi = g.point(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < nc; ++j) {
            const auto pj = g.point(j);
            double d = 0.0;
            for (int ax = 0; ax < g.dim; ++ax) d += (pi[ax] - pj[ax]) * (pi[ax] - pj[ax]);
            mx = std::max(mx, a[std::size_t(j)] - d / (2.0 * eps));
        }
        double s = 0.0;
        for (std::int64_t j = 0; j < nc; ++j) {
            const auto pj = g.point(j);
            double d = 0.0;
            for (int ax = 0; ax < g.dim; ++ax) d += (pi[ax] - pj[ax]) * (pi[ax] - pj[ax]);
            s += std::exp(a[std::size_t(j)] - d / (2.0 * eps) - mx);
        }
        out[std::size_t(i)] = mx + std::log(s);
    }
    return out;
}

std::vector<double> run_softmin(const Grid& g, const std::vector<double>& a, double eps) {
    std::vector<std::vector<double>> tbls(std::size_t(g.dim));
    std::vector<const double*> tp(std::size_t(g.dim));
    for (int ax = 0; ax < g.dim; ++ax) {
        tbls[std::size_t(ax)] = kernels::axis_cost_table(g, ax, eps);
        tp[std::size_t(ax)] = tbls[std::size_t(ax)].data();
    }
    std::vector<double> out, scratch;
    kernels::softmin_grid(g, tp, a, out, scratch);
    return out;
}

} // namespace

TEST_CASE("softmin matches brute-force LSE in 1D, 2D, 3D") {
    Rng rng(5);
    for (int dim : {1, 2, 3}) {
        std::array<int, 3> n{1, 1, 1};
        if (dim == 1) n = {40, 1, 1};
        if (dim == 2) n = {9, 7, 1};
        if (dim == 3) n = {5, 4, 3};
        Grid g(dim, {0, 0, 0}, {1, 0.8, 1.2}, n);
        std::vector<double> a(std::size_t(g.cells()));
        for (auto& x : a) x = rng.uniform(-40.0, 3.0);
        a[0] = -std::numeric_limits<double>::infinity(); // zero-mass cell
        for (double eps : {0.3, 1e-2, 1e-3}) {
            const auto ref = brute_softmin(g, a, eps);
            const auto got = run_softmin(g, a, eps);
            for (std::size_t i = 0; i < ref.size(); ++i)
                CHECK(std::abs(got[i] - ref[i]) <= 1e-11 * (1.0 + std::abs(ref[i])));
        }
    }
}

TEST_CASE("softmin and plan_scan are bitwise identical serial vs parallel") {
    Rng rng(17);
    Grid g(2, {0, 0, 0}, {1, 1, 1}, {24, 24, 1});
    std::vector<double> a(std::size_t(g.cells())), b(std::size_t(g.cells()));
    for (auto& x : a) x = rng.uniform(-200.0, 0.0);
    for (auto& x : b) x = rng.uniform(-200.0, 0.0);
    const double eps = 3e-3;

    kernels::set_threads(0);
    const auto s_soft = run_softmin(g, a, eps);
    const auto s_scan = kernels::plan_scan(g, a, b, eps);
    kernels::set_threads(4);
    const auto p_soft = run_softmin(g, a, eps);
    const auto p_scan = kernels::plan_scan(g, a, b, eps);
    kernels::set_threads(0);

    for (std::size_t i = 0; i < s_soft.size(); ++i) CHECK(s_soft[i] == p_soft[i]);
    CHECK(s_scan.mass == p_scan.mass);
    CHECK(s_scan.cost == p_scan.cost);
    for (std::size_t i = 0; i < s_scan.row_sums.size(); ++i) {
        CHECK(s_scan.row_sums[i] == p_scan.row_sums[i]);
        CHECK(s_scan.col_sums[i] == p_scan.col_sums[i]);
    }
}

TEST_CASE("plan_scan sums and cost agree with direct evaluation") {
    Rng rng(23);
    Grid g(1, {0, 0, 0}, {1, 1, 1}, {30, 1, 1});
    const double eps = 5e-3;
    std::vector<double> a(30), b(30);
    for (auto& x : a) x = rng.uniform(-8.0, -2.0);
    for (auto& x : b) x = rng.uniform(-8.0, -2.0);
    const auto scan = kernels::plan_scan(g, a, b, eps);
    double mass = 0.0, cost = 0.0;
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) {
            const double d = (g.center(0, i) - g.center(0, j)) * (g.center(0, i) - g.center(0, j));
            const double pi = std::exp(a[std::size_t(i)] + b[std::size_t(j)] - d / (2.0 * eps));
            mass += pi;
            cost += pi * d;
        }
    CHECK(scan.mass == doctest::Approx(mass).epsilon(1e-12));
    CHECK(scan.cost == doctest::Approx(cost).epsilon(1e-11));
}
