#include "verigin/io.hpp"

#include "verigin/oracle.hpp"
#include "verigin/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace verigin {

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Grid RunConfig::grid() const { return Grid(dim, domain_min, domain_max, cells); }

EnergyParams RunConfig::energy_params() const {
    EnergyParams p;
    p.m = m;
    p.lambda = lambda;
    p.sigma = sigma;
    p.c_omega = c_omega < 0.0 ? default_c_omega(p, grid()) : c_omega;
    return p;
}

StepConfig RunConfig::step_config() const {
    StepConfig s;
    s.h = h;
    s.energy = energy_params();
    s.entropic.eps0 = eps0;
    s.entropic.eps_min = eps_min;
    s.entropic.gamma = gamma;
    s.entropic.max_sweeps = max_sweeps;
    s.entropic.tol_marginal = tol_marginal;
    s.entropic.debias = debias;
    s.outer_max = outer_max;
    s.outer_tol = outer_tol;
    s.newton_tol = newton_tol;
    s.pd_max = pd_max;
    s.pd_tol = pd_tol;
    return s;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& origin, int line, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) fail(origin, line, key + ": trailing characters in '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail(origin, line, key + ": not a number: '" + v + "'");
    }
}

long long parse_int(const std::string& origin, int line, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) fail(origin, line, key + ": trailing characters in '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail(origin, line, key + ": not an integer: '" + v + "'");
    }
}

bool parse_bool(const std::string& origin, int line, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

template <typename T, typename ParseFn>
std::array<T, 3> parse_axes(const std::string& origin, int line, const std::string& key, const std::string& v,
                            ParseFn fn, T fill) {
    const auto parts = split_commas(v);
    if (parts.empty() || parts.size() > 3) fail(origin, line, key + ": expected 1-3 comma-separated values");
    std::array<T, 3> out{fill, fill, fill};
    for (std::size_t i = 0; i < parts.size(); ++i) out[i] = T(fn(origin, line, key, parts[i]));
    if (parts.size() == 1) out[1] = out[2] = out[0];
    return out;
}

std::string axes_str(const std::array<double, 3>& a, int dim) {
    std::string s = format_g17(a[0]);
    for (int i = 1; i < dim; ++i) s += "," + format_g17(a[i]);
    return s;
}

std::string axes_str(const std::array<int, 3>& a, int dim) {
    std::string s = std::to_string(a[0]);
    for (int i = 1; i < dim; ++i) s += "," + std::to_string(a[i]);
    return s;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::stringstream ss(text);
    std::string raw;
    int ln = 0;
    while (std::getline(ss, raw)) {
        ++ln;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(origin, ln, "malformed line (expected key=value): '" + trim(raw) + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, ln, "empty key");

        if (key == "dim") {
            c.dim = int(parse_int(origin, ln, key, val));
            if (c.dim < 1 || c.dim > 3) fail(origin, ln, "dim must be 1, 2 or 3");
        } else if (key == "cells") {
            c.cells = parse_axes<int>(origin, ln, key, val, parse_int, 1);
            for (int a = 0; a < 3; ++a)
                if (c.cells[a] != 1 && c.cells[a] < 2) fail(origin, ln, "cells must be >= 2 per axis");
        } else if (key == "domain_min") {
            c.domain_min = parse_axes<double>(origin, ln, key, val, parse_double, 0.0);
        } else if (key == "domain_max") {
            c.domain_max = parse_axes<double>(origin, ln, key, val, parse_double, 1.0);
        } else if (key == "m") {
            c.m = parse_double(origin, ln, key, val);
            if (c.m < 1.0) fail(origin, ln, "m must be >= 1");
        } else if (key == "lambda") {
            c.lambda = parse_double(origin, ln, key, val);
            if (!(c.lambda > 0.0)) fail(origin, ln, "lambda must be > 0");
        } else if (key == "sigma") {
            c.sigma = parse_double(origin, ln, key, val);
            if (!(c.sigma > 0.0)) fail(origin, ln, "sigma must be > 0");
        } else if (key == "c_omega") {
            if (val == "auto")
                c.c_omega = -1.0;
            else {
                c.c_omega = parse_double(origin, ln, key, val);
                if (c.c_omega < 0.0) fail(origin, ln, "c_omega must be >= 0 or auto");
            }
        } else if (key == "eps0") {
            c.eps0 = val == "auto" ? 0.0 : parse_double(origin, ln, key, val);
            if (c.eps0 < 0.0) fail(origin, ln, "eps0 must be > 0 or auto");
        } else if (key == "eps_min") {
            c.eps_min = val == "auto" ? 0.0 : parse_double(origin, ln, key, val);
            if (c.eps_min < 0.0) fail(origin, ln, "eps_min must be > 0 or auto");
        } else if (key == "gamma") {
            c.gamma = parse_double(origin, ln, key, val);
            if (!(c.gamma > 0.0 && c.gamma < 1.0)) fail(origin, ln, "gamma must be in (0,1)");
        } else if (key == "max_sweeps") {
            c.max_sweeps = int(parse_int(origin, ln, key, val));
            if (c.max_sweeps < 1) fail(origin, ln, "max_sweeps must be >= 1");
        } else if (key == "tol_marginal") {
            c.tol_marginal = parse_double(origin, ln, key, val);
            if (!(c.tol_marginal > 0.0)) fail(origin, ln, "tol_marginal must be > 0");
        } else if (key == "debias") {
            c.debias = parse_bool(origin, ln, key, val);
        } else if (key == "h") {
            c.h = parse_double(origin, ln, key, val);
            if (!(c.h > 0.0)) fail(origin, ln, "h must be > 0");
        } else if (key == "T") {
            c.T = parse_double(origin, ln, key, val);
            if (c.T < 0.0) fail(origin, ln, "T must be >= 0");
        } else if (key == "outer_max") {
            c.outer_max = int(parse_int(origin, ln, key, val));
            if (c.outer_max < 1) fail(origin, ln, "outer_max must be >= 1");
        } else if (key == "outer_tol") {
            c.outer_tol = val == "auto" ? 0.0 : parse_double(origin, ln, key, val);
            if (c.outer_tol < 0.0) fail(origin, ln, "outer_tol must be > 0 or auto");
        } else if (key == "newton_tol") {
            c.newton_tol = parse_double(origin, ln, key, val);
            if (!(c.newton_tol > 0.0)) fail(origin, ln, "newton_tol must be > 0");
        } else if (key == "pd_max") {
            c.pd_max = int(parse_int(origin, ln, key, val));
            if (c.pd_max < 1) fail(origin, ln, "pd_max must be >= 1");
        } else if (key == "pd_tol") {
            c.pd_tol = parse_double(origin, ln, key, val);
            if (!(c.pd_tol > 0.0)) fail(origin, ln, "pd_tol must be > 0");
        } else if (key == "rho_preset") {
            if (val != "uniform" && val != "gaussian" && val != "two-bump")
                fail(origin, ln, "unknown rho_preset '" + val + "'");
            c.rho_preset = val;
        } else if (key == "rho_center") {
            c.rho_center = parse_axes<double>(origin, ln, key, val, parse_double, 0.5);
        } else if (key == "rho_center2") {
            c.rho_center2 = parse_axes<double>(origin, ln, key, val, parse_double, 0.5);
        } else if (key == "rho_width") {
            c.rho_width = parse_double(origin, ln, key, val);
            if (!(c.rho_width > 0.0)) fail(origin, ln, "rho_width must be > 0");
        } else if (key == "chi_preset") {
            if (val != "empty" && val != "full" && val != "interval" && val != "disk" && val != "random")
                fail(origin, ln, "unknown chi_preset '" + val + "'");
            c.chi_preset = val;
        } else if (key == "chi_a") {
            c.chi_a = parse_double(origin, ln, key, val);
        } else if (key == "chi_b") {
            c.chi_b = parse_double(origin, ln, key, val);
        } else if (key == "chi_center") {
            c.chi_center = parse_axes<double>(origin, ln, key, val, parse_double, 0.5);
        } else if (key == "chi_radius") {
            c.chi_radius = parse_double(origin, ln, key, val);
            if (!(c.chi_radius >= 0.0)) fail(origin, ln, "chi_radius must be >= 0");
        } else if (key == "chi_p") {
            c.chi_p = parse_double(origin, ln, key, val);
            if (c.chi_p < 0.0 || c.chi_p > 1.0) fail(origin, ln, "chi_p must be in [0,1]");
        } else if (key == "seed") {
            c.seed = std::uint64_t(parse_int(origin, ln, key, val));
        } else if (key == "diag_dissipation") {
            c.diag.dissipation = parse_bool(origin, ln, key, val);
        } else if (key == "diag_holder") {
            c.diag.holder = parse_bool(origin, ln, key, val);
        } else if (key == "diag_holder_samples") {
            c.diag.holder_samples = int(parse_int(origin, ln, key, val));
            if (c.diag.holder_samples < 2) fail(origin, ln, "diag_holder_samples must be >= 2");
        } else if (key == "diag_optimality") {
            c.diag.optimality = parse_bool(origin, ln, key, val);
        } else if (key == "diag_jump") {
            c.diag.jump = parse_bool(origin, ln, key, val);
        } else if (key == "diag_almost_min") {
            c.diag.almost_min = parse_bool(origin, ln, key, val);
        } else if (key == "diag_almost_min_competitors") {
            c.diag.almost_min_competitors = int(parse_int(origin, ln, key, val));
            if (c.diag.almost_min_competitors < 4) fail(origin, ln, "need >= 4 competitors");
        } else if (key == "diag_sampled_steps") {
            c.diag.sampled_steps = int(parse_int(origin, ln, key, val));
            if (c.diag.sampled_steps < 1) fail(origin, ln, "diag_sampled_steps must be >= 1");
        } else if (key == "diag_degiorgi_steps") {
            c.diag.degiorgi_steps = int(parse_int(origin, ln, key, val));
            if (c.diag.degiorgi_steps < 0) fail(origin, ln, "diag_degiorgi_steps must be >= 0");
        } else if (key == "diag_euler_lagrange") {
            c.diag.euler_lagrange = parse_bool(origin, ln, key, val);
        } else if (key == "diag_optimal_dissipation") {
            c.diag.optimal_dissipation = parse_bool(origin, ln, key, val);
        } else if (key == "diag_transport_residual") {
            c.diag.transport_residual = parse_bool(origin, ln, key, val);
        } else if (key == "diag_muckenhoupt") {
            c.diag.muckenhoupt = parse_bool(origin, ln, key, val);
        } else if (key == "diag_muckenhoupt_radii") {
            c.diag.muckenhoupt_radii = int(parse_int(origin, ln, key, val));
            if (c.diag.muckenhoupt_radii < 1) fail(origin, ln, "diag_muckenhoupt_radii must be >= 1");
        } else if (key == "diag_stability") {
            c.diag.stability = parse_bool(origin, ln, key, val);
        } else if (key == "diag_threshold_exactness") {
            c.diag.threshold_exactness = parse_bool(origin, ln, key, val);
        } else if (key == "outdir") {
            if (val.empty()) fail(origin, ln, "outdir must not be empty");
            c.outdir = val;
        } else if (key == "checkpoint_every") {
            c.checkpoint_every = int(parse_int(origin, ln, key, val));
            if (c.checkpoint_every < 1) fail(origin, ln, "checkpoint_every must be >= 1");
        } else if (key == "corrupt_step") {
            c.corrupt_step = parse_int(origin, ln, key, val);
            if (c.corrupt_step < 0) fail(origin, ln, "corrupt_step must be >= 0");
        } else {
            fail(origin, ln, "unknown key '" + key + "'");
        }
    }
    c.diag.seed = c.seed;
    // structural checks with no line anchor
    for (int a = 0; a < c.dim; ++a) {
        if (!(c.domain_max[a] > c.domain_min[a])) throw ConfigError(origin + ": empty domain on axis " + std::to_string(a));
        if (c.cells[a] < 2) throw ConfigError(origin + ": need >= 2 cells on axis " + std::to_string(a));
    }
    if (c.eps0 > 0.0 && c.eps_min > 0.0 && c.eps_min > c.eps0)
        throw ConfigError(origin + ": eps_min must be <= eps0");
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string echo_config(const RunConfig& c) {
    std::ostringstream o;
    auto opt = [&](double x) { return x < 0.0 ? std::string("auto") : format_g17(x); };
    auto optz = [&](double x) { return x == 0.0 ? std::string("auto") : format_g17(x); };
    o << "# grid\n";
    o << "dim=" << c.dim << "\n";
    o << "cells=" << axes_str(c.cells, c.dim) << "\n";
    o << "domain_min=" << axes_str(c.domain_min, c.dim) << "\n";
    o << "domain_max=" << axes_str(c.domain_max, c.dim) << "\n";
    o << "# energy\n";
    o << "m=" << format_g17(c.m) << "\n";
    o << "lambda=" << format_g17(c.lambda) << "\n";
    o << "sigma=" << format_g17(c.sigma) << "\n";
    o << "c_omega=" << opt(c.c_omega) << "\n";
    o << "# transport\n";
    o << "eps0=" << optz(c.eps0) << "\n";
    o << "eps_min=" << optz(c.eps_min) << "\n";
    o << "gamma=" << format_g17(c.gamma) << "\n";
    o << "max_sweeps=" << c.max_sweeps << "\n";
    o << "tol_marginal=" << format_g17(c.tol_marginal) << "\n";
    o << "debias=" << (c.debias ? "true" : "false") << "\n";
    o << "# stepper\n";
    o << "h=" << format_g17(c.h) << "\n";
    o << "T=" << format_g17(c.T) << "\n";
    o << "outer_max=" << c.outer_max << "\n";
    o << "outer_tol=" << optz(c.outer_tol) << "\n";
    o << "newton_tol=" << format_g17(c.newton_tol) << "\n";
    o << "pd_max=" << c.pd_max << "\n";
    o << "pd_tol=" << format_g17(c.pd_tol) << "\n";
    o << "# initial data\n";
    o << "rho_preset=" << c.rho_preset << "\n";
    o << "rho_center=" << axes_str(c.rho_center, c.dim) << "\n";
    o << "rho_center2=" << axes_str(c.rho_center2, c.dim) << "\n";
    o << "rho_width=" << format_g17(c.rho_width) << "\n";
    o << "chi_preset=" << c.chi_preset << "\n";
    o << "chi_a=" << format_g17(c.chi_a) << "\n";
    o << "chi_b=" << format_g17(c.chi_b) << "\n";
    o << "chi_center=" << axes_str(c.chi_center, c.dim) << "\n";
    o << "chi_radius=" << format_g17(c.chi_radius) << "\n";
    o << "chi_p=" << format_g17(c.chi_p) << "\n";
    o << "seed=" << c.seed << "\n";
    o << "# diagnostics\n";
    auto b = [](bool x) { return x ? "true" : "false"; };
    o << "diag_dissipation=" << b(c.diag.dissipation) << "\n";
    o << "diag_holder=" << b(c.diag.holder) << "\n";
    o << "diag_holder_samples=" << c.diag.holder_samples << "\n";
    o << "diag_optimality=" << b(c.diag.optimality) << "\n";
    o << "diag_jump=" << b(c.diag.jump) << "\n";
    o << "diag_almost_min=" << b(c.diag.almost_min) << "\n";
    o << "diag_almost_min_competitors=" << c.diag.almost_min_competitors << "\n";
    o << "diag_sampled_steps=" << c.diag.sampled_steps << "\n";
    o << "diag_degiorgi_steps=" << c.diag.degiorgi_steps << "\n";
    o << "diag_euler_lagrange=" << b(c.diag.euler_lagrange) << "\n";
    o << "diag_optimal_dissipation=" << b(c.diag.optimal_dissipation) << "\n";
    o << "diag_transport_residual=" << b(c.diag.transport_residual) << "\n";
    o << "diag_muckenhoupt=" << b(c.diag.muckenhoupt) << "\n";
    o << "diag_muckenhoupt_radii=" << c.diag.muckenhoupt_radii << "\n";
    o << "diag_stability=" << b(c.diag.stability) << "\n";
    o << "diag_threshold_exactness=" << b(c.diag.threshold_exactness) << "\n";
    o << "# output\n";
    o << "outdir=" << c.outdir << "\n";
    o << "checkpoint_every=" << c.checkpoint_every << "\n";
    o << "corrupt_step=" << c.corrupt_step << "\n";
    return o.str();
}

std::string default_config_text() {
    return "# verigin run configuration — all keys with their default values\n" + echo_config(RunConfig{});
}

std::pair<ScalarField, PhaseField> init_data(const RunConfig& cfg) {
    const Grid g = cfg.grid();
    ScalarField rho(g, 0.0);
    const std::int64_t nc = g.cells();
    auto gauss = [&](std::array<double, 3> center) {
        for (std::int64_t i = 0; i < nc; ++i) {
            const auto p = g.point(i);
            double d2 = 0.0;
            for (int a = 0; a < g.dim; ++a) d2 += (p[a] - center[a]) * (p[a] - center[a]);
            rho[i] += std::exp(-d2 / (2.0 * cfg.rho_width * cfg.rho_width));
        }
    };
    if (cfg.rho_preset == "uniform") {
        for (std::int64_t i = 0; i < nc; ++i) rho[i] = 1.0;
    } else if (cfg.rho_preset == "gaussian") {
        gauss(cfg.rho_center);
    } else if (cfg.rho_preset == "two-bump") {
        gauss(cfg.rho_center);
        gauss(cfg.rho_center2);
    } else {
        throw ConfigError("unknown rho preset: " + cfg.rho_preset);
    }
    const double mass = integrate(rho);
    for (auto& x : rho.v) x /= mass;

    PhaseField chi(g, 0);
    if (cfg.chi_preset == "empty") {
        // zeros
    } else if (cfg.chi_preset == "full") {
        for (auto& x : chi.v) x = 1;
    } else if (cfg.chi_preset == "interval") {
        for (std::int64_t i = 0; i < nc; ++i) {
            const double x = g.point(i)[0];
            if (x >= cfg.chi_a && x < cfg.chi_b) chi[i] = 1;
        }
    } else if (cfg.chi_preset == "disk") {
        for (std::int64_t i = 0; i < nc; ++i) {
            const auto p = g.point(i);
            double d2 = 0.0;
            for (int a = 0; a < g.dim; ++a) d2 += (p[a] - cfg.chi_center[a]) * (p[a] - cfg.chi_center[a]);
            if (d2 <= cfg.chi_radius * cfg.chi_radius) chi[i] = 1;
        }
    } else if (cfg.chi_preset == "random") {
        Rng rng(cfg.seed);
        for (std::int64_t i = 0; i < nc; ++i) chi[i] = rng.uniform() < cfg.chi_p ? 1 : 0;
    } else {
        throw ConfigError("unknown chi preset: " + cfg.chi_preset);
    }
    return {std::move(rho), std::move(chi)};
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

namespace {
std::string dims_line(const Grid& g) {
    std::string s = "dims";
    for (int a = 0; a < g.dim; ++a) s += " " + std::to_string(g.n[a]);
    return s;
}
} // namespace

void write_field(const std::string& path, const ScalarField& f) {
    std::string s = dims_line(f.grid) + "\n";
    s.reserve(f.v.size() * 26 + 32);
    for (double x : f.v) {
        s += format_g17(x);
        s += "\n";
    }
    write_text_atomic(path, s);
}

void write_field(const std::string& path, const PhaseField& f) {
    std::string s = dims_line(f.grid) + "\n";
    for (auto x : f.v) {
        s += x ? "1" : "0";
        s += "\n";
    }
    write_text_atomic(path, s);
}

namespace {
void read_field_header(std::ifstream& in, const std::string& path, const Grid& g) {
    std::string hdr;
    if (!std::getline(in, hdr)) throw std::runtime_error("empty field file: " + path);
    std::stringstream hs(hdr);
    std::string tag;
    hs >> tag;
    if (tag != "dims") throw std::runtime_error("bad field header in " + path);
    for (int a = 0; a < g.dim; ++a) {
        int n = 0;
        hs >> n;
        if (n != g.n[a]) throw std::runtime_error("field dims mismatch in " + path);
    }
}
} // namespace

ScalarField read_scalar_field(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file: " + path);
    read_field_header(in, path, g);
    ScalarField f(g);
    for (std::int64_t i = 0; i < g.cells(); ++i)
        if (!(in >> f[i])) throw std::runtime_error("short field file: " + path);
    return f;
}

PhaseField read_phase_field(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file: " + path);
    read_field_header(in, path, g);
    PhaseField f(g);
    for (std::int64_t i = 0; i < g.cells(); ++i) {
        int x;
        if (!(in >> x)) throw std::runtime_error("short field file: " + path);
        if (x != 0 && x != 1) throw std::runtime_error("non-binary phase value in " + path);
        f[i] = std::uint8_t(x);
    }
    return f;
}

std::string timeseries_csv(const Trajectory& traj) {
    std::ostringstream o;
    o << "step,time,energy,perimeter,internal,coupling,w2sq_over_2h,mass,min_rho,outer_iters\n";
    auto row = [&](std::int64_t n, const EnergyBreakdown& e, double w2over2h, const ScalarField& rho,
                   int outer) {
        double mn = rho.v[0];
        for (double x : rho.v) mn = std::min(mn, x);
        o << n << "," << format_g17(double(n) * traj.cfg.h) << "," << format_g17(e.total) << ","
          << format_g17(e.perimeter) << "," << format_g17(e.internal) << "," << format_g17(e.coupling) << ","
          << format_g17(w2over2h) << "," << format_g17(integrate(rho)) << "," << format_g17(mn) << ","
          << outer << "\n";
    };
    row(0, traj.energy0, 0.0, traj.rho0, 0);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const auto& s = traj.steps[k];
        row(std::int64_t(k) + 1, s.energy, s.w2_squared / (2.0 * traj.cfg.h), s.rho, s.outer_iters);
    }
    return o.str();
}

std::string certificates_csv(const TrajectoryReport& rep) {
    std::ostringstream o;
    o << "step,check,lhs,rhs,slack,tol,pass\n";
    for (const auto& c : rep.checks)
        o << c.step << "," << c.name << "," << format_g17(c.lhs) << "," << format_g17(c.rhs) << ","
          << format_g17(c.slack) << "," << format_g17(c.tol) << "," << (c.pass ? 1 : 0) << "\n";
    return o.str();
}

namespace {

std::string stats_csv(const Trajectory& traj) {
    std::ostringstream o;
    o << "step,w2_squared,w2_dual,marginal_error,sweeps,newton_max_iters,pd_iters,pd_gap,"
         "phase_relaxed_energy,phase_thresholded_energy,outer_iters,outer_converged,outer_stalled,"
         "monotonicity_violation\n";
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const auto& s = traj.steps[k];
        o << (k + 1) << "," << format_g17(s.w2_squared) << "," << format_g17(s.stats.w2_dual) << ","
          << format_g17(s.stats.marginal_error) << "," << s.stats.sweeps << "," << s.stats.newton_max_iters
          << "," << s.stats.pd_iters << "," << format_g17(s.stats.pd_gap) << ","
          << format_g17(s.stats.phase_relaxed_energy) << "," << format_g17(s.stats.phase_thresholded_energy)
          << "," << s.outer_iters << "," << (s.stats.outer_converged ? 1 : 0) << ","
          << (s.stats.outer_stalled ? 1 : 0) << "," << format_g17(s.stats.monotonicity_violation) << "\n";
    }
    return o.str();
}

std::string field_path(const std::string& dir, const char* what, std::int64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%06lld.txt", what, static_cast<long long>(n));
    return dir + "/" + buf;
}

} // namespace

std::string report_text(const Trajectory& traj, const TrajectoryReport& rep) {
    std::ostringstream o;
    o << "verigin trajectory report\n";
    o << "w2 method for certificates: " << rep.w2_method << "\n";
    o << "steps: " << traj.steps.size() << "\n";
    o << "checks: " << rep.checks.size() << ", failures: " << rep.fail_count() << "\n\n";
    o << "check notes:\n";
    for (const auto& c : rep.checks)
        if (!c.note.empty())
            o << "  " << c.name << " step " << c.step << ": " << c.note << (c.pass ? "" : "  [FAIL]") << "\n";
    if (!rep.stability.empty()) {
        o << "\nstability ratio series (no pass/fail, constant C unknown";
        if (traj.grid.dim == 1) o << "; 1D uses the d=2 exponents beta=2, gamma=1 as a heuristic";
        o << "):\n  n,k,lhs,lp_norm,dissipation,ratio\n";
        for (const auto& r : rep.stability)
            o << "  " << r.n << "," << r.k << "," << format_g17(r.lhs) << "," << format_g17(r.lp_norm) << ","
              << format_g17(r.dissipation) << "," << format_g17(r.ratio) << "\n";
    }
    if (!rep.muckenhoupt.empty()) {
        o << "\nmuckenhoupt A1 estimate of (rho^1)^(d/(d-1)) (heuristic box indicator";
        if (traj.grid.dim == 1) o << "; 1D uses exponent 2";
        o << "):\n  step,c_w\n";
        for (const auto& r : rep.muckenhoupt) o << "  " << r.step << "," << format_g17(r.c_w) << "\n";
    }
    return o.str();
}

void export_trajectory(const Trajectory& traj, const std::string& dir, int checkpoint_every) {
    fs::create_directories(dir);
    write_text_atomic(dir + "/timeseries.csv", timeseries_csv(traj));
    write_text_atomic(dir + "/stats.csv", stats_csv(traj));
    write_field(field_path(dir, "rho", 0), traj.rho0);
    write_field(field_path(dir, "chi", 0), traj.chi0);
    const auto N = std::int64_t(traj.steps.size());
    for (std::int64_t n = 1; n <= N; ++n) {
        if (n % checkpoint_every != 0 && n != N) continue;
        const auto& s = traj.steps[std::size_t(n - 1)];
        write_field(field_path(dir, "rho", n), s.rho);
        write_field(field_path(dir, "chi", n), s.chi);
        write_field(field_path(dir, "phi", n), s.phi);
    }
}

Trajectory load_trajectory(const std::string& dir, RunConfig* cfg_out) {
    std::ifstream ce(dir + "/config.echo");
    if (!ce) throw std::runtime_error("missing " + dir + "/config.echo");
    std::stringstream ss;
    ss << ce.rdbuf();
    RunConfig cfg = parse_config_text(ss.str(), dir + "/config.echo");
    if (cfg_out) *cfg_out = cfg;

    const Grid g = cfg.grid();
    Trajectory traj;
    traj.grid = g;
    traj.rho0 = read_scalar_field(field_path(dir, "rho", 0), g);
    traj.chi0 = read_phase_field(field_path(dir, "chi", 0), g);
    StepConfig sc = cfg.step_config();
    traj.energy0 = total_energy(traj.rho0, traj.chi0, sc.energy);
    sc.outer_tol = resolve_outer_tol(sc, traj.energy0.total);
    traj.cfg = sc;

    std::ifstream stf(dir + "/stats.csv");
    if (!stf) throw std::runtime_error("missing " + dir + "/stats.csv");
    std::string line;
    std::getline(stf, line); // header
    while (std::getline(stf, line)) {
        if (trim(line).empty()) continue;
        auto parts = split_commas(line);
        if (parts.size() != 14) throw std::runtime_error("bad stats.csv row: " + line);
        StepResult s;
        const auto n = std::int64_t(std::stoll(parts[0]));
        s.rho = read_scalar_field(field_path(dir, "rho", n), g);
        s.chi = read_phase_field(field_path(dir, "chi", n), g);
        s.phi = read_scalar_field(field_path(dir, "phi", n), g);
        s.w2_squared = std::stod(parts[1]);
        s.stats.w2_dual = std::stod(parts[2]);
        s.stats.marginal_error = std::stod(parts[3]);
        s.stats.sweeps = int(std::stoll(parts[4]));
        s.stats.newton_max_iters = int(std::stoll(parts[5]));
        s.stats.pd_iters = int(std::stoll(parts[6]));
        s.stats.pd_gap = std::stod(parts[7]);
        s.stats.phase_relaxed_energy = std::stod(parts[8]);
        s.stats.phase_thresholded_energy = std::stod(parts[9]);
        s.outer_iters = int(std::stoll(parts[10]));
        s.stats.outer_converged = parts[11] == "1";
        s.stats.outer_stalled = parts[12] == "1";
        s.stats.monotonicity_violation = std::stod(parts[13]);
        s.energy = total_energy(s.rho, s.chi, sc.energy);
        traj.steps.push_back(std::move(s));
    }
    return traj;
}

namespace {

std::string manifest_text(const RunConfig& cfg, const Trajectory& traj, const TrajectoryReport* rep,
                          double wall_seconds, bool partial, const std::string& error) {
    std::ostringstream o;
    o << "verigin 0.1.0\n";
    o << "partial=" << (partial ? 1 : 0) << "\n";
    if (!error.empty()) o << "error=" << error << "\n";
    o << "wall_clock_seconds=" << format_g17(wall_seconds) << "\n";
    o << "steps_completed=" << traj.steps.size() << "\n";
    o << "dim=" << cfg.dim << " cells=" << axes_str(cfg.cells, cfg.dim) << " h=" << format_g17(cfg.h)
      << " T=" << format_g17(cfg.T) << " m=" << format_g17(cfg.m) << " lambda=" << format_g17(cfg.lambda)
      << "\n";
    o << "energy0=" << format_g17(traj.energy0.total) << "\n";
    if (!traj.steps.empty())
        o << "energy_final=" << format_g17(traj.steps.back().energy.total) << "\n";
    if (rep) {
        int pass = 0;
        for (const auto& c : rep->checks)
            if (c.pass) ++pass;
        o << "certificates_pass=" << pass << "/" << rep->checks.size() << "\n";
        o << "w2_method=" << rep->w2_method << "\n";
        for (const auto& c : rep->checks)
            if (!c.pass)
                o << "failed: " << c.name << " step " << c.step << " slack=" << format_g17(c.slack)
                  << " tol=" << format_g17(c.tol) << "\n";
    }
    o << "config_echo=config.echo\n";
    return o.str();
}

} // namespace

int run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        const Grid g = cfg.grid();
        auto [rho0, chi0] = init_data(cfg);
        StepConfig sc = cfg.step_config();

        Trajectory partial;
        partial.grid = g;
        partial.rho0 = rho0;
        partial.chi0 = chi0;
        partial.energy0 = total_energy(rho0, chi0, sc.energy);
        StepConfig scr = sc;
        scr.outer_tol = resolve_outer_tol(sc, partial.energy0.total);
        partial.cfg = scr;

        fs::create_directories(cfg.outdir);
        write_text_atomic(cfg.outdir + "/config.echo", echo_config(cfg));

        Trajectory traj;
        try {
            traj = run_flow(rho0, chi0, cfg.T, sc,
                            [&](std::int64_t, const StepResult& s) { partial.steps.push_back(s); });
        } catch (const std::exception& ex) {
            export_trajectory(partial, cfg.outdir, cfg.checkpoint_every);
            write_text_atomic(cfg.outdir + "/manifest.txt",
                              manifest_text(cfg, partial, nullptr, wall(), true, ex.what()));
            std::cerr << "verigin run: solver error: " << ex.what() << "\n";
            return 1;
        }

        if (cfg.corrupt_step >= 1 && cfg.corrupt_step <= std::int64_t(traj.steps.size())) {
            // fault injection for negative-control tests: inflate one step's recorded energy
            traj.steps[std::size_t(cfg.corrupt_step - 1)].energy.total += 1.0;
        }

        const TrajectoryReport rep = run_diagnostics(traj, cfg.diag);
        export_trajectory(traj, cfg.outdir, cfg.checkpoint_every);
        write_text_atomic(cfg.outdir + "/certificates.csv", certificates_csv(rep));
        write_text_atomic(cfg.outdir + "/report.txt", report_text(traj, rep));
        write_text_atomic(cfg.outdir + "/manifest.txt",
                          manifest_text(cfg, traj, &rep, wall(), false, ""));
        if (!rep.all_pass()) {
            std::cerr << "verigin run: " << rep.fail_count() << " certificate(s) failed, see "
                      << cfg.outdir << "/certificates.csv\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "verigin run: error: " << ex.what() << "\n";
        return 1;
    }
}

int run_config_file(const std::string& path, std::int64_t corrupt_step_override) {
    try {
        RunConfig cfg = parse_config(path);
        if (corrupt_step_override >= 0) cfg.corrupt_step = corrupt_step_override;
        return run(cfg);
    } catch (const std::exception& ex) {
        std::cerr << "verigin run: error: " << ex.what() << "\n";
        return 1;
    }
}

int check_run_dir(const std::string& dir) {
    try {
        RunConfig cfg;
        const Trajectory traj = load_trajectory(dir, &cfg);
        if (traj.steps.empty()) {
            std::cout << "verigin check: trajectory has no steps; nothing to verify\n";
            return 0;
        }
        const TrajectoryReport rep = run_diagnostics(traj, cfg.diag);
        write_text_atomic(dir + "/certificates_recheck.csv", certificates_csv(rep));
        std::cout << "verigin check: " << rep.checks.size() << " checks, " << rep.fail_count()
                  << " failure(s)\n";
        for (const auto& c : rep.checks)
            if (!c.pass)
                std::cout << "  FAIL " << c.name << " step " << c.step << " slack=" << format_g17(c.slack)
                          << " tol=" << format_g17(c.tol) << "\n";
        return rep.all_pass() ? 0 : 2;
    } catch (const std::exception& ex) {
        std::cerr << "verigin check: error: " << ex.what() << "\n";
        return 1;
    }
}

int oracle_compare(const RunConfig& cfg) {
    try {
        const Grid g = cfg.grid();
        if (g.dim != 1) throw std::invalid_argument("oracle: 1D configs only");
        EnumerationBudget budget;
        if (g.cells() > budget.max_cells)
            throw std::invalid_argument("oracle: at most " + std::to_string(budget.max_cells) + " cells");
        auto [rho0, chi0] = init_data(cfg);
        StepConfig sc = cfg.step_config();
        sc.outer_tol = resolve_outer_tol(sc, total_energy(rho0, chi0, sc.energy).total);

        const StepResult alt = jko_step(rho0, chi0, sc);
        const double alt_obj = 0.5 / sc.h * alt.stats.w2_dual + alt.energy.total;
        const BruteForceResult bf = brute_force_joint(rho0, sc, budget);
        const double tol = 1e-8 * (1.0 + std::abs(bf.objective));
        std::cout << "alternating objective: " << format_g17(alt_obj) << "\n";
        std::cout << "brute-force objective: " << format_g17(bf.objective) << " (chi code " << bf.chi_code
                  << ")\n";
        std::cout << "gap: " << format_g17(alt_obj - bf.objective) << " tol: " << format_g17(tol) << "\n";
        const bool ok = alt_obj <= bf.objective + tol;
        std::cout << (ok ? "PASS" : "FAIL") << "\n";
        return ok ? 0 : 2;
    } catch (const std::exception& ex) {
        std::cerr << "verigin oracle: error: " << ex.what() << "\n";
        return 1;
    }
}

} // namespace verigin
