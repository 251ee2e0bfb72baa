#pragma once

#include "verigin/grid.hpp"

#include <cstdint>
#include <vector>

namespace verigin::kernels {

// Subsolver parallelism cap. 0 = serial (default). Parallel and serial paths
// produce bitwise-identical results: every output entry is reduced in a fixed
// serial order and cross-cell reductions are combined block-wise in index order.
void set_threads(int t);
int threads();
// reads VERIGIN_THREADS (unset/0 -> serial)
void init_threads_from_env();

// Squared-distance table for one axis at regularization eps:
// tbl[i*n+j] = (c_i - c_j)^2 / (2 eps) with c_k the cell centers along the axis.
std::vector<double> axis_cost_table(const Grid& g, int axis, double eps);

// Separable log-domain softmin over the whole grid:
//   out_i = LSE_j( a_j - sum_axes (x_i,ax - x_j,ax)^2/(2 eps) )
// computed one axis at a time (exact identity). `a` is in exponent units.
// tbls[axis] must come from axis_cost_table at the same eps.
void softmin_grid(const Grid& g, const std::vector<const double*>& tbls,
                  const std::vector<double>& a, std::vector<double>& out,
                  std::vector<double>& scratch);

// One full pass over the (never materialized) plan
//   pi_ij = exp(ax_i + ay_j - |x_i - x_j|^2/(2 eps))
// accumulating row sums, column sums, total mass and transport cost
// sum pi_ij |x_i - x_j|^2. Deterministic: fixed 64-row blocks combined in order.
struct PlanScan {
    std::vector<double> row_sums;
    std::vector<double> col_sums;
    double mass = 0.0;
    double cost = 0.0;      // sum pi |x-y|^2 (full squared distance, not halved)
    double bary_cost = 0.0; // sum_i rowsum_i |x_i - ybar_i|^2, the barycentric-projection
                            // transport cost (plugin cost minus plan conditional variance)
};

PlanScan plan_scan(const Grid& g, const std::vector<double>& ax, const std::vector<double>& ay,
                   double eps);

} // namespace verigin::kernels
