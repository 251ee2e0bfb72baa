#include "doctest.h"

#include "verigin/rng.hpp"
#include "verigin/transport.hpp"

#include <cmath>

using namespace verigin;

namespace {

Grid g1d(int n, double a = 0.0, double b = 1.0) { return Grid(1, {a, 0, 0}, {b, 1, 1}, {n, 1, 1}); }

ScalarField normalized(ScalarField f) {
    const double m = integrate(f);
    for (auto& x : f.v) x /= m;
    return f;
}

// smooth strictly positive random density from a few Fourier modes
ScalarField random_density(const Grid& g, std::uint64_t seed) {
    Rng rng(seed);
    const double pi = std::acos(-1.0);
    ScalarField f(g);
    std::array<double, 4> amp{}, ph{};
    for (int k = 0; k < 4; ++k) {
        amp[std::size_t(k)] = rng.uniform(-1.0, 1.0);
        ph[std::size_t(k)] = rng.uniform(0.0, 2.0 * pi);
    }
    for (std::int64_t i = 0; i < g.cells(); ++i) {
        const double x = g.point(i)[0];
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += amp[std::size_t(k)] * std::cos((k + 1) * pi * x + ph[std::size_t(k)]);
        f[i] = std::exp(s);
    }
    return normalized(std::move(f));
}

ScalarField translation_lo(const Grid& g) {
    ScalarField f(g, 0.0);
    for (std::int64_t i = 0; i < g.cells(); ++i)
        if (g.point(i)[0] < 0.5) f[i] = 2.0;
    return f;
}

ScalarField translation_hi(const Grid& g) {
    ScalarField f(g, 0.0);
    for (std::int64_t i = 0; i < g.cells(); ++i)
        if (g.point(i)[0] > 0.5) f[i] = 2.0;
    return f;
}

} // namespace

TEST_CASE("w2_exact_1d: identity, translation, quantile closed form") {
    Grid g = g1d(128);
    ScalarField u(g, 1.0);
    CHECK(w2_exact_1d(u, u) == 0.0);

    CHECK(w2_exact_1d(translation_lo(g), translation_hi(g)) == doctest::Approx(0.25).epsilon(1e-12));

    // uniform vs rho(x)=2x: continuum value 1/30; discretized densities converge to it
    double prev = 1.0;
    for (int n : {256, 1024, 4096}) {
        Grid gg = g1d(n);
        ScalarField lin(gg);
        for (int i = 0; i < n; ++i) lin[i] = 2.0 * gg.center(0, i);
        const double val = w2_exact_1d(normalized(ScalarField(gg, 1.0)), normalized(std::move(lin)));
        const double err = std::abs(val - 1.0 / 30.0);
        CHECK(err < prev);
        prev = err;
        if (n == 4096) CHECK(err <= 1e-6);
    }
}

TEST_CASE("w2_exact_1d: symmetry and triangle inequality on sampled triples") {
    Grid g = g1d(64);
    for (std::uint64_t s = 1; s <= 8; ++s) {
        const ScalarField a = random_density(g, s);
        const ScalarField b = random_density(g, s + 100);
        const ScalarField c = random_density(g, s + 200);
        CHECK(std::abs(w2_exact_1d(a, b) - w2_exact_1d(b, a)) <= 1e-12);
        const double dab = std::sqrt(w2_exact_1d(a, b));
        const double dbc = std::sqrt(w2_exact_1d(b, c));
        const double dac = std::sqrt(w2_exact_1d(a, c));
        CHECK(dac <= dab + dbc + 1e-10);
    }
}

TEST_CASE("w2_exact_1d: mass mismatch is an error") {
    Grid g = g1d(16);
    ScalarField a(g, 1.0), b(g, 1.1);
    CHECK_THROWS(w2_exact_1d(a, b));
}

TEST_CASE("sinkhorn identity pair stays below entropic bias budget") {
    Grid g = g1d(128);
    const ScalarField rho = random_density(g, 42);
    EntropicParams P;
    P.eps_min = 1e-4;
    const TransportResult r = sinkhorn(rho, rho, P);
    CHECK(r.w2_squared >= 0.0);
    CHECK(r.w2_squared <= 1e-2);
    CHECK(r.marginal_error <= P.tol_marginal);
}

TEST_CASE("sinkhorn translation pair vs exact") {
    Grid g = g1d(128);
    EntropicParams P;
    P.eps_min = 1e-4;
    const TransportResult r = sinkhorn(translation_lo(g), translation_hi(g), P);
    CHECK(std::abs(r.w2_squared - 0.25) <= 1e-3 * 0.25);
}

TEST_CASE("sinkhorn oracle sweep: 20 seeded pairs within 1e-3 relative at default schedule") {
    Grid g = g1d(128);
    EntropicParams P; // defaults: eps_min = 4 dx^2
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const ScalarField a = random_density(g, 2 * s);
        const ScalarField b = random_density(g, 2 * s + 1);
        const double exact = w2_exact_1d(a, b);
        const TransportResult r = sinkhorn(a, b, P);
        CHECK(std::abs(r.w2_squared - exact) <= 1e-3 * exact);
    }
}

TEST_CASE("sinkhorn monotone eps refinement trend") {
    Grid g = g1d(128);
    for (std::uint64_t s : {3u, 7u, 11u}) {
        const ScalarField a = random_density(g, s);
        const ScalarField b = random_density(g, s + 50);
        const double exact = w2_exact_1d(a, b);
        double prev = std::numeric_limits<double>::infinity();
        for (double em : {16e-4, 4e-4, 1e-4}) {
            EntropicParams P;
            P.eps_min = em;
            const double err = std::abs(sinkhorn(a, b, P).w2_squared - exact);
            CHECK(err <= prev * (1.0 + 1e-9));
            prev = err;
        }
    }
}

TEST_CASE("kantorovich_potential: identity, translation displacement, dissipation identity") {
    Grid g = g1d(128);
    EntropicParams P;
    P.eps_min = 1e-4;

    const ScalarField rho = random_density(g, 9);
    TransportResult rid = sinkhorn(rho, rho, P);
    ScalarField phi0 = kantorovich_potential(rid, 1.0);
    double pmax = 0.0, lmin = 1e300, lmax = -1e300;
    for (std::int64_t i = 0; i < g.cells(); ++i) {
        pmax = std::max(pmax, std::abs(phi0[i]));
        lmin = std::min(lmin, std::log(rho[i]));
        lmax = std::max(lmax, std::log(rho[i]));
    }
    // the self potential carries an intrinsic -(eps/2) log rho profile; after gauge
    // fixing the residual is bounded by that entropic scale
    CHECK(pmax <= P.eps_min * (1.0 + lmax - lmin));

    // translation by 1/2 with interior support: grad phi constant on supp
    Grid gg = g1d(256);
    ScalarField a(gg, 0.0), b(gg, 0.0);
    for (std::int64_t i = 0; i < gg.cells(); ++i) {
        const double x = gg.point(i)[0];
        if (x > 0.05 && x < 0.45) a[i] = 1.0;
        if (x > 0.55 && x < 0.95) b[i] = 1.0;
    }
    a = normalized(std::move(a));
    b = normalized(std::move(b));
    EntropicParams P2;
    P2.eps_min = 1e-4;
    const double h = 0.25;
    TransportResult rt = sinkhorn(b, a, P2); // current side is b, source is a
    ScalarField phi = kantorovich_potential(rt, h);
    // rho-weighted variance of grad phi over interior supp vs mean square <= 5%
    const auto supp = support_mask(b);
    double wsum = 0.0, mean = 0.0;
    std::vector<double> grad(std::size_t(gg.cells()), 0.0);
    for (std::int64_t i = 1; i < gg.cells() - 1; ++i) {
        if (!supp[std::size_t(i)] || !supp[std::size_t(i - 1)] || !supp[std::size_t(i + 1)]) continue;
        grad[std::size_t(i)] = (phi[i + 1] - phi[i - 1]) / (2.0 * gg.dx(0));
        wsum += b[i];
        mean += b[i] * grad[std::size_t(i)];
    }
    mean /= wsum;
    CHECK(std::abs(mean * h - 0.5) <= 0.05 * 0.5); // displacement = -h grad phi toward the source
    double var = 0.0;
    for (std::int64_t i = 1; i < gg.cells() - 1; ++i)
        if (grad[std::size_t(i)] != 0.0) var += b[i] * (grad[std::size_t(i)] - mean) * (grad[std::size_t(i)] - mean);
    var /= wsum;
    CHECK(var <= 0.05 * mean * mean);

    // dissipation identity W2^2 = h^2 int |grad phi|^2 rho (h=1 case doubles as the spec's h form)
    for (std::uint64_t s : {5u, 6u}) {
        const ScalarField x = random_density(g, s);
        const ScalarField y = random_density(g, s + 30);
        TransportResult r = sinkhorn(x, y, P);
        ScalarField ph = kantorovich_potential(r, 1.0);
        std::vector<double> terms(std::size_t(g.cells()), 0.0);
        for (std::int64_t i = 1; i < g.cells() - 1; ++i) {
            const double gp = (ph[i + 1] - ph[i - 1]) / (2.0 * g.dx(0));
            terms[std::size_t(i)] = gp * gp * x[i];
        }
        const double lhs = pairwise_sum(terms) * g.cell_volume();
        CHECK(std::abs(lhs - r.w2_squared) <= 0.02 * r.w2_squared);
    }
}

TEST_CASE("sinkhorn marginal constraint and determinism") {
    Grid g = g1d(64);
    const ScalarField a = random_density(g, 77);
    const ScalarField b = random_density(g, 78);
    EntropicParams P;
    const TransportResult r1 = sinkhorn(a, b, P);
    const TransportResult r2 = sinkhorn(a, b, P);
    CHECK(r1.w2_squared == r2.w2_squared);
    CHECK(r1.marginal_error == r2.marginal_error);
    CHECK(r1.marginal_error <= P.tol_marginal);
}

TEST_CASE("sinkhorn debias flag reports a smaller-bias value on the identity pair") {
    Grid g = g1d(64);
    const ScalarField rho = random_density(g, 5);
    EntropicParams P;
    P.debias = true;
    const TransportResult r = sinkhorn(rho, rho, P);
    CHECK(std::isfinite(r.w2_debiased));
    CHECK(std::abs(r.w2_debiased) <= r.w2_squared + 1e-15);
}

TEST_CASE("sinkhorn non-convergence carries the marginal error") {
    Grid g = g1d(64);
    const ScalarField a = random_density(g, 1);
    const ScalarField b = random_density(g, 2);
    EntropicParams P;
    P.max_sweeps = 1;
    P.tol_marginal = 1e-14;
    try {
        sinkhorn(a, b, P);
        CHECK(false);
    } catch (const TransportError& e) {
        CHECK(e.marginal_error > 1e-14);
    }
}
