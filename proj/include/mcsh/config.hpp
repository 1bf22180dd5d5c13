#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsh/diagnostics.hpp"
#include "mcsh/dynamics.hpp"
#include "mcsh/initial_data.hpp"
#include "mcsh/potential.hpp"

namespace mcsh {

/// Invalid or unreadable run configuration; `key()` names the offender.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;

    double dt = 0.0;    // > 0 overrides cfl
    double cfl = 0.5;   // dt = cfl * min(dx, dy)
    double t_end = 0.0;
    A0Rate a0_rate = A0Rate::elliptic;

    double kappa = 1.0;
    int degree_m = 1, degree_q = 1;
    std::vector<double> alpha{0.0};

    InitialDataSpec initial{};
    EllipticTolerances tol{};
    DiagnosticsSettings diagnostics{};
    int monitor_every = 1;     // steps between time-series rows
    int snapshot_every = 0;    // steps between snapshots; 0 = final only
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    std::string source_text;   // verbatim file, echoed into run.meta

    Grid grid() const { return Grid(nx, ny, lx, ly); }
    PotentialSpec potential() const { return PotentialSpec(degree_m, degree_q, alpha, kappa); }
    StepOptions step_options() const { return StepOptions{tol, a0_rate, Orientation::positive}; }

    double cfl_bound(const Grid& g) const { return 0.5 * std::min(g.dx(), g.dy()); }
    double requested_dt(const Grid& g) const { return dt > 0.0 ? dt : cfl * std::min(g.dx(), g.dy()); }

    /// Steps to reach t_end exactly and the matching step size.
    std::pair<long, double> schedule(const Grid& g) const {
        const double want = requested_dt(g);
        const long steps = std::max<long>(1, static_cast<long>(std::ceil(t_end / want - 1e-9)));
        return {steps, t_end / static_cast<double>(steps)};
    }

    /// Non-fatal issues worth recording in the run log.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        const Grid g = grid();
        const double d = schedule(g).second;
        if (d > cfl_bound(g) * (1 + 1e-12)) w.push_back("dt exceeds the CFL bound 0.5 * min(dx, dy); expect instability");
        if (t_end >= 0.5 * std::min(lx, ly)) w.push_back("t_end >= min(lx, ly)/2: signals can wrap around the torus");
        if (initial.under_resolved(g)) w.push_back("initial width below 2 grid spacings");
        if (potential().unbounded_below()) w.push_back("potential is unbounded below");
        return w;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (v.empty() || end != begin + v.size() || !std::isfinite(d)) throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return d;
}

inline long long to_integer(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

}  // namespace detail

/// Parses sectioned `key = value` text. Unknown sections or keys, duplicate
/// keys and constraint violations are errors naming the key.
inline RunConfig parse_config_text(const std::string& text) {
    using detail::to_double;
    using detail::to_integer;
    using detail::trim;

    std::map<std::string, std::string> kv;  // "section.key" -> value
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError(key, "key outside of any [section]");
        const std::string full = section + "." + key;
        if (!kv.emplace(full, trim(line.substr(eq + 1))).second) throw ConfigError(full, "duplicate key");
    }

    static const std::set<std::string> known = {
        "grid.nx", "grid.ny", "grid.lx", "grid.ly",
        "integrator.dt", "integrator.cfl", "integrator.t_end", "integrator.a0_rate",
        "potential.kappa", "potential.alpha",
        "initial.kind", "initial.phi_amplitude", "initial.phi_rate_amplitude", "initial.n_amplitude",
        "initial.n_rate_amplitude", "initial.a_amplitude", "initial.a_rate_amplitude", "initial.a_angle",
        "initial.width", "initial.x0", "initial.y0", "initial.carrier_kx", "initial.carrier_ky", "initial.winding",
        "initial.mode_x", "initial.mode_y", "initial.noise_amplitude", "initial.noise_modes", "initial.band_limit",
        "initial.smoothing_order", "initial.snapshot",
        "elliptic.tol_rel", "elliptic.tol_abs", "elliptic.max_iterations",
        "diagnostics.hs_exponents", "diagnostics.monitor_every", "diagnostics.fd_order",
        "output.dir", "output.snapshot_every",
        "run.seed",
    };
    for (const auto& [k, v] : kv) {
        if (!known.contains(k)) throw ConfigError(k, "unknown key");
    }

    auto has = [&](const std::string& k) { return kv.contains(k); };
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError(k, "missing required key");
        return it->second;
    };
    auto num = [&](const std::string& k, double& out) { if (has(k)) out = to_double(k, kv.at(k)); };
    auto integer = [&](const std::string& k, int& out) { if (has(k)) out = static_cast<int>(to_integer(k, kv.at(k))); };

    RunConfig c;
    c.source_text = text;
    c.nx = static_cast<int>(to_integer("grid.nx", need("grid.nx")));
    c.ny = static_cast<int>(to_integer("grid.ny", need("grid.ny")));
    c.lx = to_double("grid.lx", need("grid.lx"));
    c.ly = to_double("grid.ly", need("grid.ly"));
    if (c.nx < 8 || c.nx % 2 != 0) throw ConfigError("grid.nx", "must be even and >= 8");
    if (c.ny < 8 || c.ny % 2 != 0) throw ConfigError("grid.ny", "must be even and >= 8");
    if (!(c.lx > 0.0)) throw ConfigError("grid.lx", "must be > 0");
    if (!(c.ly > 0.0)) throw ConfigError("grid.ly", "must be > 0");

    if (has("integrator.dt") && has("integrator.cfl")) throw ConfigError("integrator.dt", "give either dt or cfl, not both");
    num("integrator.dt", c.dt);
    num("integrator.cfl", c.cfl);
    if (has("integrator.dt") && !(c.dt > 0.0)) throw ConfigError("integrator.dt", "must be > 0");
    if (!(c.cfl > 0.0)) throw ConfigError("integrator.cfl", "must be > 0");
    c.t_end = to_double("integrator.t_end", need("integrator.t_end"));
    if (!(c.t_end > 0.0)) throw ConfigError("integrator.t_end", "must be > 0");
    if (has("integrator.a0_rate")) {
        const auto& v = kv.at("integrator.a0_rate");
        if (v == "elliptic") c.a0_rate = A0Rate::elliptic;
        else if (v == "lagged") c.a0_rate = A0Rate::lagged;
        else throw ConfigError("integrator.a0_rate", "expected 'elliptic' or 'lagged', got '" + v + "'");
    }

    c.kappa = to_double("potential.kappa", need("potential.kappa"));
    if (!(c.kappa > 0.0)) throw ConfigError("potential.kappa", "kappa must be > 0 (Chern-Simons constant positivity)");
    if (has("potential.alpha")) {
        struct Term { long long m, q; double v; };
        std::vector<Term> terms;
        for (const auto& entry : detail::split(kv.at("potential.alpha"), ';')) {
            const auto parts = detail::split(entry, ',');
            if (parts.size() != 3) throw ConfigError("potential.alpha", "entries must be 'm, q, value' separated by ';'");
            Term t{to_integer("potential.alpha", parts[0]), to_integer("potential.alpha", parts[1]),
                   to_double("potential.alpha", parts[2])};
            if (t.m < 1 || t.q < 1 || t.m > 16 || t.q > 16) throw ConfigError("potential.alpha", "indices m, q must lie in 1..16");
            terms.push_back(t);
        }
        if (!terms.empty()) {
            for (const auto& t : terms) {
                c.degree_m = std::max<int>(c.degree_m, static_cast<int>(t.m));
                c.degree_q = std::max<int>(c.degree_q, static_cast<int>(t.q));
            }
            c.alpha.assign(static_cast<std::size_t>(c.degree_m * c.degree_q), 0.0);
            std::set<std::pair<long long, long long>> seen;
            for (const auto& t : terms) {
                if (!seen.insert({t.m, t.q}).second) throw ConfigError("potential.alpha", "duplicate (m, q) entry");
                c.alpha[static_cast<std::size_t>((t.m - 1) * c.degree_q + (t.q - 1))] = t.v;
            }
        }
    }

    InitialDataSpec& id = c.initial;
    if (has("initial.kind")) {
        const auto& v = kv.at("initial.kind");
        if (v == "gaussian_packet") id.kind = InitialKind::gaussian_packet;
        else if (v == "vortex_like") id.kind = InitialKind::vortex_like;
        else if (v == "single_mode") id.kind = InitialKind::single_mode;
        else if (v == "from_snapshot") id.kind = InitialKind::from_snapshot;
        else throw ConfigError("initial.kind", "unknown kind '" + v + "'");
    }
    num("initial.phi_amplitude", id.phi_amplitude);
    num("initial.phi_rate_amplitude", id.phi_rate_amplitude);
    num("initial.n_amplitude", id.n_amplitude);
    num("initial.n_rate_amplitude", id.n_rate_amplitude);
    num("initial.a_amplitude", id.a_amplitude);
    num("initial.a_rate_amplitude", id.a_rate_amplitude);
    num("initial.a_angle", id.a_angle);
    num("initial.width", id.width);
    num("initial.x0", id.x0);
    num("initial.y0", id.y0);
    num("initial.carrier_kx", id.carrier_kx);
    num("initial.carrier_ky", id.carrier_ky);
    integer("initial.winding", id.winding);
    integer("initial.mode_x", id.mode_x);
    integer("initial.mode_y", id.mode_y);
    num("initial.noise_amplitude", id.noise_amplitude);
    integer("initial.noise_modes", id.noise_modes);
    num("initial.band_limit", id.band_limit);
    integer("initial.smoothing_order", id.smoothing_order);
    if (has("initial.snapshot")) id.snapshot_path = kv.at("initial.snapshot");
    if (!(id.width > 0.0)) throw ConfigError("initial.width", "must be > 0");
    if (!(id.band_limit > 0.0) || id.band_limit > 1.0) throw ConfigError("initial.band_limit", "must lie in (0, 1]");
    if (id.smoothing_order < 0) throw ConfigError("initial.smoothing_order", "must be >= 0");
    if (id.noise_modes < 1) throw ConfigError("initial.noise_modes", "must be >= 1");
    if (id.kind == InitialKind::from_snapshot && id.snapshot_path.empty()) {
        throw ConfigError("initial.snapshot", "required when kind = from_snapshot");
    }

    num("elliptic.tol_rel", c.tol.rel);
    num("elliptic.tol_abs", c.tol.abs);
    integer("elliptic.max_iterations", c.tol.max_iterations);
    if (!(c.tol.rel >= 0.0)) throw ConfigError("elliptic.tol_rel", "must be >= 0");
    if (!(c.tol.abs >= 0.0)) throw ConfigError("elliptic.tol_abs", "must be >= 0");
    if (c.tol.rel + c.tol.abs <= 0.0) throw ConfigError("elliptic.tol_rel", "tol_rel + tol_abs must be > 0");
    if (c.tol.max_iterations < 1) throw ConfigError("elliptic.max_iterations", "must be >= 1");

    if (has("diagnostics.hs_exponents")) {
        c.diagnostics.hs_exponents.clear();
        std::istringstream hs(kv.at("diagnostics.hs_exponents"));
        std::string tok;
        while (hs >> tok) {
            const double s = to_double("diagnostics.hs_exponents", tok);
            if (s < 0.0) throw ConfigError("diagnostics.hs_exponents", "exponents must be >= 0");
            c.diagnostics.hs_exponents.push_back(s);
        }
    }
    integer("diagnostics.monitor_every", c.monitor_every);
    integer("diagnostics.fd_order", c.diagnostics.fd_order);
    if (c.monitor_every < 1) throw ConfigError("diagnostics.monitor_every", "must be >= 1");
    if (c.diagnostics.fd_order < 2 || c.diagnostics.fd_order % 2 != 0 || c.diagnostics.fd_order >= std::min(c.nx, c.ny)) {
        throw ConfigError("diagnostics.fd_order", "must be even, >= 2 and below the grid size");
    }

    if (has("output.dir")) c.output_dir = kv.at("output.dir");
    integer("output.snapshot_every", c.snapshot_every);
    if (c.snapshot_every < 0) throw ConfigError("output.snapshot_every", "must be >= 0");
    if (has("run.seed")) {
        const long long s = to_integer("run.seed", kv.at("run.seed"));
        if (s < 0) throw ConfigError("run.seed", "must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    c.initial.seed = c.seed;
    return c;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace mcsh
