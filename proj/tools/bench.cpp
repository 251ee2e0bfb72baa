// Benchmark comparing the serial reference path against the OpenMP path for the
// hot kernels (softmin sweeps, plan scan) and a full JKO step. The two paths are
// bitwise identical by construction; this only measures wall time.
#include "verigin/io.hpp"
#include "verigin/kernels.hpp"
#include "verigin/stepper.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

using namespace verigin;

namespace {

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double bench_softmin(const Grid& g, int reps) {
    const double eps = 1e-4;
    std::vector<std::vector<double>> tbls(std::size_t(g.dim));
    std::vector<const double*> tp(std::size_t(g.dim));
    for (int a = 0; a < g.dim; ++a) {
        tbls[std::size_t(a)] = kernels::axis_cost_table(g, a, eps);
        tp[std::size_t(a)] = tbls[std::size_t(a)].data();
    }
    std::vector<double> in(std::size_t(g.cells())), out, scratch;
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = std::sin(double(i)) - 5.0;
    const double t0 = now();
    double sink = 0.0;
    for (int r = 0; r < reps; ++r) {
        kernels::softmin_grid(g, tp, in, out, scratch);
        sink += out[0];
    }
    const double dt = now() - t0;
    std::printf("  (checksum %.6f)\n", sink);
    return dt;
}

double bench_step(const Grid& g, const RunConfig& cfg) {
    auto [rho0, chi0] = init_data(cfg);
    StepConfig sc = cfg.step_config();
    const double t0 = now();
    const StepResult s = jko_step(rho0, chi0, sc);
    const double dt = now() - t0;
    std::printf("  (step w2=%.3e sweeps=%d)\n", s.w2_squared, s.stats.sweeps);
    return dt;
}

} // namespace

int main(int argc, char** argv) {
    int threads = 2;
    if (argc > 1) threads = std::atoi(argv[1]);

    RunConfig cfg;
    cfg.dim = 1;
    cfg.cells = {512, 1, 1};
    cfg.h = 1e-3;
    const Grid g1 = cfg.grid();

    RunConfig cfg2;
    cfg2.dim = 2;
    cfg2.cells = {48, 48, 1};
    cfg2.h = 1e-2;
    cfg2.m = 2.0;
    cfg2.lambda = 0.5;
    cfg2.rho_width = 0.15;
    cfg2.chi_preset = "disk";
    const Grid g2 = cfg2.grid();

    std::printf("verigin-bench: serial reference vs OpenMP (%d threads)\n", threads);

    kernels::set_threads(0);
    const double s1 = bench_softmin(g1, 200);
    kernels::set_threads(threads);
    const double p1 = bench_softmin(g1, 200);
    std::printf("softmin 1D N=512 x200:   serial %.3fs   omp %.3fs   speedup %.2fx\n", s1, p1, s1 / p1);

    kernels::set_threads(0);
    const double s2 = bench_softmin(g2, 200);
    kernels::set_threads(threads);
    const double p2 = bench_softmin(g2, 200);
    std::printf("softmin 2D 48x48 x200:   serial %.3fs   omp %.3fs   speedup %.2fx\n", s2, p2, s2 / p2);

    kernels::set_threads(0);
    const double s3 = bench_step(g1, cfg);
    kernels::set_threads(threads);
    const double p3 = bench_step(g1, cfg);
    std::printf("jko step 1D N=512:       serial %.3fs   omp %.3fs   speedup %.2fx\n", s3, p3, s3 / p3);

    kernels::set_threads(0);
    const double s4 = bench_step(g2, cfg2);
    kernels::set_threads(threads);
    const double p4 = bench_step(g2, cfg2);
    std::printf("jko step 2D 48x48:       serial %.3fs   omp %.3fs   speedup %.2fx\n", s4, p4, s4 / p4);

    kernels::set_threads(0);
    return 0;
}
