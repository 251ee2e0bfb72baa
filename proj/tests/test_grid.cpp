#include "doctest.h"

#include "verigin/grid.hpp"
#include "verigin/rng.hpp"

#include <cmath>

using namespace verigin;

namespace {
Grid g1d(int n, double a = 0.0, double b = 1.0) { return Grid(1, {a, 0, 0}, {b, 1, 1}, {n, 1, 1}); }
} // namespace

TEST_CASE("integrate: constant, zero, midpoint-exact linear") {
    Grid g = g1d(10);
    ScalarField one(g, 1.0), zero(g, 0.0);
    CHECK(integrate(one) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrate(zero) == 0.0);

    Grid g2 = g1d(100);
    ScalarField x(g2);
    for (int i = 0; i < 100; ++i) x[i] = g2.center(0, i);
    // midpoint rule is exact on linear integrands
    CHECK(integrate(x) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("integrate linearity") {
    Grid g = g1d(64);
    Rng rng(7);
    ScalarField f(g), h(g);
    for (int i = 0; i < 64; ++i) {
        f[i] = rng.uniform(-1.0, 3.0);
        h[i] = rng.uniform(-2.0, 2.0);
    }
    const double al = 1.7, be = -0.3;
    ScalarField comb(g);
    for (int i = 0; i < 64; ++i) comb[i] = al * f[i] + be * h[i];
    const double lhs = integrate(comb);
    const double rhs = al * integrate(f) + be * integrate(h);
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(lhs)));
}

TEST_CASE("gradient: constant, linear, quadratic exactness") {
    Grid g = g1d(64);
    ScalarField c(g, 3.25);
    VectorField gc = gradient(c);
    for (int i = 0; i < 64; ++i) CHECK(gc.at(0, i) == 0.0);

    ScalarField x(g);
    for (int i = 0; i < 64; ++i) x[i] = g.center(0, i);
    VectorField gx = gradient(x);
    for (int i = 1; i < 63; ++i) CHECK(gx.at(0, i) == doctest::Approx(1.0).epsilon(1e-13));

    ScalarField x2(g);
    for (int i = 0; i < 64; ++i) x2[i] = g.center(0, i) * g.center(0, i);
    VectorField gx2 = gradient(x2);
    // central difference is exact on quadratics
    for (int i = 1; i < 63; ++i)
        CHECK(std::abs(gx2.at(0, i) - 2.0 * g.center(0, i)) <= 1e-12);
}

TEST_CASE("divergence: constant, 1D linear, 2D rotation-free pair") {
    Grid g = g1d(32);
    VectorField v(g);
    for (int i = 0; i < 32; ++i) v.at(0, i) = 2.5;
    ScalarField dv = divergence(v);
    for (int i = 0; i < 32; ++i) CHECK(dv[i] == 0.0);

    for (int i = 0; i < 32; ++i) v.at(0, i) = g.center(0, i);
    dv = divergence(v);
    for (int i = 1; i < 31; ++i) CHECK(dv[i] == doctest::Approx(1.0).epsilon(1e-13));

    Grid g2(2, {0, 0, 0}, {1, 1, 1}, {16, 16, 1});
    VectorField v2(g2);
    for (std::int64_t i = 0; i < g2.cells(); ++i) {
        const auto p = g2.point(i);
        v2.at(0, i) = p[0];
        v2.at(1, i) = -p[1];
    }
    ScalarField dv2 = divergence(v2);
    for (std::int64_t i = 0; i < g2.cells(); ++i) {
        const auto c2 = g2.unflatten(i);
        if (c2[0] == 0 || c2[0] == 15 || c2[1] == 0 || c2[1] == 15) continue;
        CHECK(std::abs(dv2[i]) <= 1e-12);
    }
}

TEST_CASE("discrete integration by parts with boundary-flat v") {
    // |int f div v + int grad f . v| <= C dx for smooth samples with v.nu = 0
    const double pi = std::acos(-1.0);
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        Grid g = g1d(n);
        ScalarField f(g);
        VectorField v(g);
        for (int i = 0; i < n; ++i) {
            const double x = g.center(0, i);
            f[i] = std::cos(pi * x);
            v.at(0, i) = std::sin(pi * x) * std::sin(pi * x); // vanishes at 0 and 1
        }
        ScalarField dv = divergence(v);
        VectorField gf = gradient(f);
        ScalarField prod(g);
        for (int i = 0; i < n; ++i) prod[i] = f[i] * dv[i] + gf.at(0, i) * v.at(0, i);
        const double resid = std::abs(integrate(prod));
        CHECK(resid <= 10.0 * g.dx(0));
        if (n > 32) CHECK(resid < prev);
        prev = resid;
        MESSAGE("integration-by-parts residual at N=", n, ": ", resid);
    }
}

TEST_CASE("jump_faces: empty, 1D interval, 2D block, complement invariance") {
    Grid g = g1d(10);
    PhaseField chi(g, 0);
    CHECK(jump_faces(chi).empty());

    for (int i = 4; i <= 7; ++i) chi[i] = 1;
    auto faces = jump_faces(chi);
    CHECK(faces.size() == 2);
    // cell_minus is the chi=1 side
    for (const auto& f : faces) {
        CHECK(chi[f.cell_minus] == 1);
        CHECK(chi[f.cell_plus] == 0);
    }

    PhaseField flip(g, 0);
    for (int i = 0; i < 10; ++i) flip[i] = chi[i] ? 0 : 1;
    CHECK(jump_faces(flip).size() == faces.size());

    // 2D 4x4 block in a 16x16 grid: 16 faces, anisotropic perimeter 16/16 = 1
    Grid g2(2, {0, 0, 0}, {1, 1, 1}, {16, 16, 1});
    PhaseField chi2(g2, 0);
    for (std::int64_t i = 0; i < g2.cells(); ++i) {
        const auto c = g2.unflatten(i);
        if (c[0] >= 6 && c[0] < 10 && c[1] >= 6 && c[1] < 10) chi2[i] = 1;
    }
    auto faces2 = jump_faces(chi2);
    CHECK(faces2.size() == 16);
    double per = 0.0;
    for (const auto& f : faces2) per += g2.face_area(f.axis);
    CHECK(per == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("grid validation") {
    CHECK_THROWS(Grid(0, {0, 0, 0}, {1, 1, 1}, {4, 1, 1}));
    CHECK_THROWS(Grid(1, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}));
    CHECK_THROWS(Grid(1, {1, 0, 0}, {0, 1, 1}, {4, 1, 1}));
}
