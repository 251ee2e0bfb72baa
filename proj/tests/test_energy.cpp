#include "doctest.h"

#include "verigin/energy.hpp"
#include "verigin/rng.hpp"

#include <cmath>
#include <stdexcept>

using namespace verigin;

namespace {
Grid g1d(int n, double a = 0.0, double b = 1.0) { return Grid(1, {a, 0, 0}, {b, 1, 1}, {n, 1, 1}); }
} // namespace

TEST_CASE("f values") {
    CHECK(f(1.0, 1.0) == 0.0);
    CHECK(f(1.0, 2.0) == 1.0);
    CHECK(f(0.0, 1.0) == 0.0); // 0 log 0 := 0
    const double e = std::exp(1.0);
    CHECK(f(1.0 / e, 1.0) == doctest::Approx(-1.0 / e).epsilon(1e-14));
    CHECK_THROWS_AS(f(-0.5, 1.0), std::domain_error);
}

TEST_CASE("f_prime values") {
    CHECK(f_prime(1.0, 1.0) == 1.0);
    CHECK(f_prime(1.0, 2.0) == 2.0);
    const double e = std::exp(1.0);
    CHECK(f_prime(e, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(f_prime(0.0, 1.0), std::domain_error);
}

TEST_CASE("f is convex (sampled)") {
    Rng rng(11);
    for (double m : {1.0, 1.5, 2.0, 3.0}) {
        for (int k = 0; k < 200; ++k) {
            const double a = rng.uniform(1e-3, 5.0);
            const double b = rng.uniform(1e-3, 5.0);
            const double th = rng.uniform();
            const double lhs = f(th * a + (1 - th) * b, m);
            const double rhs = th * f(a, m) + (1 - th) * f(b, m);
            CHECK(lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs)));
        }
    }
}

TEST_CASE("perimeter: trivial phases and shapes") {
    Grid g = g1d(10);
    CHECK(perimeter(PhaseField(g, 0)) == 0.0);
    CHECK(perimeter(PhaseField(g, 1)) == 0.0);

    PhaseField chi(g, 0);
    chi[4] = chi[5] = 1;
    CHECK(perimeter(chi) == 2.0);
    PhaseField comp(g, 0);
    for (int i = 0; i < 10; ++i) comp[i] = chi[i] ? 0 : 1;
    CHECK(perimeter(comp) == perimeter(chi));

    // 2D axis-aligned square of side L: anisotropic perimeter 4L
    Grid g2(2, {0, 0, 0}, {1, 1, 1}, {32, 32, 1});
    PhaseField chi2(g2, 0);
    for (std::int64_t i = 0; i < g2.cells(); ++i) {
        const auto c = g2.unflatten(i);
        if (c[0] >= 8 && c[0] < 24 && c[1] >= 8 && c[1] < 24) chi2[i] = 1;
    }
    const double L = 16.0 / 32.0;
    CHECK(perimeter(chi2) == doctest::Approx(4.0 * L).epsilon(1e-13));
}

TEST_CASE("total_energy examples") {
    Grid g = g1d(10);
    EnergyParams p;
    p.m = 1.0;
    p.lambda = 1.0;
    p.c_omega = 0.7;
    ScalarField rho(g, 1.0);
    PhaseField chi(g, 0);
    auto b = total_energy(rho, chi, p);
    CHECK(b.total == doctest::Approx(p.c_omega).epsilon(1e-14));

    PhaseField full(g, 1);
    b = total_energy(rho, full, p);
    CHECK(b.perimeter == 0.0);
    CHECK(b.coupling == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(b.total == doctest::Approx(p.c_omega).epsilon(1e-14));

    // hand sum: chi on cells 4..5, m=2, lambda=0.5 -> 2 + 1 + 0.2*(0.5-1) + c
    EnergyParams p2;
    p2.m = 2.0;
    p2.lambda = 0.5;
    p2.c_omega = 0.3;
    PhaseField mid(g, 0);
    mid[4] = mid[5] = 1;
    b = total_energy(rho, mid, p2);
    CHECK(b.perimeter == doctest::Approx(2.0));
    CHECK(b.internal == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.coupling == doctest::Approx(0.2 * (0.5 - 1.0)).epsilon(1e-13));
    CHECK(b.total == doctest::Approx(2.9 + 0.3).epsilon(1e-13));
    CHECK(b.total == doctest::Approx(b.perimeter + b.internal + b.coupling + p2.c_omega).epsilon(1e-14));
}

TEST_CASE("pressure and chemical potential") {
    Grid g = g1d(4);
    EnergyParams p;
    p.m = 2.0;
    p.lambda = 2.0;
    ScalarField rho(g, 1.0);
    PhaseField chi(g, 0);
    CHECK(pressure(rho, chi, p)[0] == 1.0);
    ScalarField z(g, 0.0);
    PhaseField one(g, 1);
    CHECK(pressure(z, one, p)[0] == -2.0);
    EnergyParams p3;
    p3.m = 3.0;
    p3.lambda = 1.0;
    ScalarField two(g, 2.0);
    CHECK(pressure(two, one, p3)[0] == doctest::Approx(7.0).epsilon(1e-14));

    EnergyParams pm1;
    pm1.m = 1.0;
    CHECK(chemical_potential(rho, chi, pm1)[0] == doctest::Approx(2.0));
    CHECK(chemical_potential(rho, one, pm1)[0] == doctest::Approx(1.0));
    ScalarField re(g, std::exp(1.0));
    CHECK(chemical_potential(re, chi, pm1)[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::isinf(chemical_potential(z, chi, pm1)[0]));
}

TEST_CASE("algebraic identity rho f'(rho) - f(rho)") {
    Rng rng(3);
    Grid g = g1d(4);
    for (double m : {2.0, 3.0, 1.5}) {
        for (int k = 0; k < 100; ++k) {
            const double s = rng.uniform(1e-2, 4.0);
            const double lhs = s * f_prime(s, m) - f(s, m);
            CHECK(std::abs(lhs - std::pow(s, m)) <= 1e-12 * (1.0 + std::pow(s, m)));
        }
    }
    for (int k = 0; k < 100; ++k) {
        const double s = rng.uniform(1e-2, 4.0);
        CHECK(std::abs(s * f_prime(s, 1.0) - f(s, 1.0) - s) <= 1e-12 * (1.0 + s));
    }
    (void)g;
}

TEST_CASE("default c_omega bounds the energy below by zero") {
    // m=1 on [0,1]: 1/e + 1; m=2: 1; and the property test with random data
    Grid g = g1d(50);
    EnergyParams p;
    p.m = 1.0;
    CHECK(default_c_omega(p, g) == doctest::Approx(1.0 / std::exp(1.0) + 1.0).epsilon(1e-14));
    p.m = 2.0;
    CHECK(default_c_omega(p, g) == 1.0);
    Grid g2(2, {0, 0, 0}, {2, 2, 1}, {8, 8, 1});
    p.m = 1.0;
    CHECK(default_c_omega(p, g2) == doctest::Approx(4.0 / std::exp(1.0) + 1.0).epsilon(1e-14));

    Rng rng(19);
    for (double m : {1.0, 2.0, 3.0}) {
        EnergyParams q;
        q.m = m;
        q.lambda = rng.uniform(0.1, 2.0);
        q.c_omega = default_c_omega(q, g);
        for (int trial = 0; trial < 50; ++trial) {
            ScalarField rho(g);
            for (int i = 0; i < 50; ++i) rho[i] = rng.uniform(0.0, 1.0);
            const double mass = integrate(rho);
            for (auto& x : rho.v) x /= mass;
            PhaseField chi(g, 0);
            for (int i = 0; i < 50; ++i) chi[i] = rng.uniform() < 0.5 ? 1 : 0;
            CHECK(total_energy(rho, chi, q).total >= -1e-12);
        }
    }
}

TEST_CASE("parameter validation") {
    EnergyParams p;
    p.m = 0.5;
    CHECK_THROWS(p.validate());
    p.m = 1.0;
    p.lambda = 0.0;
    CHECK_THROWS(p.validate());
}
