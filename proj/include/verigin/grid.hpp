#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace verigin {

// Cell-centered uniform Cartesian grid on a box [lo,hi]^d, d in {1,2,3}.
// Cells are indexed row-major with axis 0 slowest (index = ((i0*n1)+i1)*n2+i2).
struct Grid {
    int dim = 1;
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};
    std::array<int, 3> n{1, 1, 1}; // cells per axis; unused axes are 1

    Grid() = default;
    Grid(int dim_, std::array<double, 3> lo_, std::array<double, 3> hi_, std::array<int, 3> n_);

    double dx(int axis) const { return (hi[axis] - lo[axis]) / n[axis]; }
    double center(int axis, int k) const { return lo[axis] + (k + 0.5) * dx(axis); }
    std::int64_t cells() const { return std::int64_t(n[0]) * n[1] * n[2]; }
    // cell measure prod(dx_a) over used axes
    double cell_volume() const;
    // measure of a face orthogonal to `axis` (1 in 1D)
    double face_area(int axis) const { return cell_volume() / dx(axis); }
    double volume() const;
    // stride of axis in the flat index
    std::int64_t stride(int axis) const;
    std::array<int, 3> unflatten(std::int64_t idx) const;
    std::array<double, 3> point(std::int64_t idx) const;

    bool operator==(const Grid& o) const = default;
};

struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(std::size_t(g.cells()), fill) {}
    double& operator[](std::int64_t i) { return v[std::size_t(i)]; }
    double operator[](std::int64_t i) const { return v[std::size_t(i)]; }
    std::int64_t size() const { return std::int64_t(v.size()); }
};

// chi in {0,1} per cell
struct PhaseField {
    Grid grid;
    std::vector<std::uint8_t> v;

    PhaseField() = default;
    explicit PhaseField(const Grid& g, std::uint8_t fill = 0) : grid(g), v(std::size_t(g.cells()), fill) {}
    std::uint8_t& operator[](std::int64_t i) { return v[std::size_t(i)]; }
    std::uint8_t operator[](std::int64_t i) const { return v[std::size_t(i)]; }
    std::int64_t size() const { return std::int64_t(v.size()); }
    bool operator==(const PhaseField& o) const { return grid == o.grid && v == o.v; }
};

// one d-vector per cell, stored component-major: comp[axis][cell]
struct VectorField {
    Grid grid;
    std::array<std::vector<double>, 3> comp;

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g) {
        for (int a = 0; a < g.dim; ++a) comp[a].assign(std::size_t(g.cells()), 0.0);
    }
    double& at(int axis, std::int64_t i) { return comp[axis][std::size_t(i)]; }
    double at(int axis, std::int64_t i) const { return comp[axis][std::size_t(i)]; }
};

// interior face where chi jumps; cell_minus is the chi=1 side (inside E)
struct JumpFace {
    int axis;
    std::int64_t cell_minus;
    std::int64_t cell_plus;
};

// deterministic pairwise summation, independent of thread count
double pairwise_sum(const double* x, std::int64_t n);
double pairwise_sum(const std::vector<double>& x);

// sum f * cell_volume over all cells
double integrate(const ScalarField& f);

// central differences at interior cells, one-sided at the boundary.
// zero_boundary_normal=true zeroes the boundary normal derivative (no-flux convention).
VectorField gradient(const ScalarField& f, bool zero_boundary_normal = false);

ScalarField divergence(const VectorField& v);

std::vector<JumpFace> jump_faces(const PhaseField& chi);

void check_finite(const ScalarField& f, const char* what);

} // namespace verigin
