#include "verigin/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace verigin {

Grid::Grid(int dim_, std::array<double, 3> lo_, std::array<double, 3> hi_, std::array<int, 3> n_)
    : dim(dim_), lo(lo_), hi(hi_), n(n_) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("Grid: dim must be 1, 2 or 3");
    for (int a = dim; a < 3; ++a) n[a] = 1;
    for (int a = 0; a < dim; ++a) {
        if (n[a] < 2) throw std::invalid_argument("Grid: need at least 2 cells per axis");
        if (!(hi[a] > lo[a])) throw std::invalid_argument("Grid: empty extent on axis " + std::to_string(a));
    }
}

double Grid::cell_volume() const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w *= dx(a);
    return w;
}

double Grid::volume() const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w *= hi[a] - lo[a];
    return w;
}

std::int64_t Grid::stride(int axis) const {
    std::int64_t s = 1;
    for (int a = axis + 1; a < dim; ++a) s *= n[a];
    return s;
}

std::array<int, 3> Grid::unflatten(std::int64_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
        c[a] = int(idx % n[a]);
        idx /= n[a];
    }
    return c;
}

std::array<double, 3> Grid::point(std::int64_t idx) const {
    auto c = unflatten(idx);
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = center(a, c[a]);
    return p;
}

double pairwise_sum(const double* x, std::int64_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    std::int64_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), std::int64_t(x.size())); }

double integrate(const ScalarField& f) {
    return pairwise_sum(f.v) * f.grid.cell_volume();
}

void check_finite(const ScalarField& f, const char* what) {
    for (double x : f.v)
        if (!std::isfinite(x)) throw std::runtime_error(std::string(what) + ": non-finite entry");
}

VectorField gradient(const ScalarField& f, bool zero_boundary_normal) {
    const Grid& g = f.grid;
    VectorField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        const double inv2 = 1.0 / (2.0 * g.dx(a));
        const double inv1 = 1.0 / g.dx(a);
        const std::int64_t nc = g.cells();
        for (std::int64_t i = 0; i < nc; ++i) {
            const int k = g.unflatten(i)[a];
            double d;
            if (k == 0)
                d = zero_boundary_normal ? 0.0 : (f[i + s] - f[i]) * inv1;
            else if (k == g.n[a] - 1)
                d = zero_boundary_normal ? 0.0 : (f[i] - f[i - s]) * inv1;
            else
                d = (f[i + s] - f[i - s]) * inv2;
            out.at(a, i) = d;
        }
    }
    return out;
}

ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid;
    ScalarField out(g, 0.0);
    for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        const double inv2 = 1.0 / (2.0 * g.dx(a));
        const double inv1 = 1.0 / g.dx(a);
        const std::int64_t nc = g.cells();
        for (std::int64_t i = 0; i < nc; ++i) {
            const int k = g.unflatten(i)[a];
            double d;
            if (k == 0)
                d = (v.at(a, i + s) - v.at(a, i)) * inv1;
            else if (k == g.n[a] - 1)
                d = (v.at(a, i) - v.at(a, i - s)) * inv1;
            else
                d = (v.at(a, i + s) - v.at(a, i - s)) * inv2;
            out[i] += d;
        }
    }
    return out;
}

std::vector<JumpFace> jump_faces(const PhaseField& chi) {
    const Grid& g = chi.grid;
    std::vector<JumpFace> faces;
    for (int a = 0; a < g.dim; ++a) {
        const std::int64_t s = g.stride(a);
        const std::int64_t nc = g.cells();
        for (std::int64_t i = 0; i < nc; ++i) {
            const int k = g.unflatten(i)[a];
            if (k == g.n[a] - 1) continue;
            const std::uint8_t c0 = chi[i], c1 = chi[i + s];
            if (c0 == c1) continue;
            if (c0 == 1)
                faces.push_back({a, i, i + s});
            else
                faces.push_back({a, i + s, i});
        }
    }
    return faces;
}

} // namespace verigin
