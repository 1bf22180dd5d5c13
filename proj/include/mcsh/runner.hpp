#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>
#include <zlib.h>

#include "mcsh/config.hpp"
#include "mcsh/diagnostics.hpp"
#include "mcsh/initial_data.hpp"
#include "mcsh/snapshot.hpp"

namespace mcsh {

inline constexpr const char* version = "1.0.0";
inline constexpr int timeseries_schema_version = 1;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int numerical_abort = 3;
inline constexpr int selftest_failure = 4;
}  // namespace exit_code

/// Initial data plus a fixed step schedule; advance() takes one RK4 step.
/// Times are set as t0 + k*dt so runs with equal schedules share time stamps exactly.
class Simulation {
public:
    explicit Simulation(const RunConfig& cfg, double perturbation = 0.0)
        : grid_(cfg.grid()), spec_(cfg.potential()), opt_(cfg.step_options()), state_(initial(cfg, perturbation)) {
        std::tie(steps_, dt_) = cfg.schedule(grid_);
        t0_ = state_.t;
        t_end_ = t0_ + cfg.t_end;
    }

    const FieldState& state() const { return state_; }
    const PotentialSpec& potential() const { return spec_; }
    const Grid& grid() const { return grid_; }
    double dt() const { return dt_; }
    long steps_total() const { return steps_; }
    long steps_done() const { return done_; }
    bool finished() const { return done_ >= steps_; }
    double time_at(long k) const { return k == steps_ ? t_end_ : t0_ + static_cast<double>(k) * dt_; }

    /// Throws NumericalAbort or EllipticSolveError; the state is unchanged on throw.
    void advance() {
        FieldState next = step(state_, dt_, spec_, opt_);
        ++done_;
        next.t = time_at(done_);
        state_ = std::move(next);
    }

private:
    FieldState initial(const RunConfig& cfg, double perturbation) const {
        InitialDataSpec id = cfg.initial;
        id.perturbation = perturbation;
        return make_initial_data(id, grid_, spec_, opt_);
    }

    Grid grid_;
    PotentialSpec spec_;
    StepOptions opt_;
    FieldState state_;
    long steps_ = 0;
    long done_ = 0;
    double dt_ = 0.0;
    double t0_ = 0.0;
    double t_end_ = 0.0;
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw ConfigError("output.dir", "cannot create output directory '" + dir.string() + "'");
    }
    const auto probe = dir / ".write_probe";
    {
        std::ofstream p(probe);
        if (!p) throw ConfigError("output.dir", "output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
}

inline std::string a0_rate_name(A0Rate r) { return r == A0Rate::elliptic ? "elliptic" : "lagged"; }

}  // namespace detail

/// Column names of timeseries.csv, in order.
inline std::vector<std::string> timeseries_columns(const DiagnosticsSettings& d) {
    std::vector<std::string> c = {
        "t", "energy", "energy_em", "energy_n_kinetic", "energy_n_gradient", "energy_phi_covariant", "energy_potential",
        "J", "J_over_growth", "J_dA", "J_phi", "J_dphi", "J_N", "J_dN", "J_d2A", "J_d3A", "J_d4A", "J_d2phi", "J_d3phi",
        "J_d4phi", "N_high", "gauge_residual", "gauge_residual_abs", "gauss_residual", "box_A", "box_phi", "box_N",
        "X", "l2_phi", "l2_N", "l2_A"};
    for (double s : d.hs_exponents) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "hs_phi_%g", s);
        c.emplace_back(buf);
    }
    c.emplace_back("elliptic_iterations");
    return c;
}

inline std::string timeseries_row(const DiagnosticsRecord& r) {
    using detail::num;
    const JNorm& j = r.j;
    std::ostringstream o;
    for (double v : {r.t, r.energy.total(), r.energy.em, r.energy.n_kinetic, r.energy.n_gradient, r.energy.phi_covariant,
                     r.energy.potential, j.total(), r.j_over_growth, j.d_a, j.phi, j.d_phi, j.n, j.d_n, j.d2_a, j.d3_a,
                     j.d4_a, j.d2_phi, j.d3_phi, j.d4_phi, j.n_high, r.gauge.relative, r.gauge.absolute, r.gauss,
                     r.box.a, r.box.phi, r.box.n, r.x_accum, r.l2_phi, r.l2_n, r.l2_a}) {
        o << num(v) << ',';
    }
    for (double v : r.hs_phi) o << num(v) << ',';
    o << r.elliptic_iterations;
    return o.str();
}

struct RunResult {
    int exit_code = exit_code::ok;
    std::string abort_message;
    double t_reached = 0.0;
    long steps = 0;
    double dt = 0.0;
    double wall_seconds = 0.0;
    std::vector<DiagnosticsRecord> records;
};

/// Drives one run: timeseries.csv, periodic snapshots plus a final one, and
/// run.meta. Numerical failures return exit code 3 with the files written so far.
/// Throws ConfigError for invalid configuration or an unusable output directory.
inline RunResult run(const RunConfig& cfg, std::ostream* log = nullptr) {
    const auto wall0 = std::chrono::steady_clock::now();
    const std::filesystem::path dir = cfg.output_dir;
    detail::ensure_directory(dir);

    RunResult res;
    std::vector<std::string> snapshots;
    std::optional<Simulation> sim;
    try {
        sim.emplace(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("initial", e.what());
    } catch (const snapshot::SnapshotError& e) {
        throw ConfigError("initial.snapshot", e.what());
    } catch (const EllipticSolveError& e) {
        res.exit_code = exit_code::numerical_abort;
        res.abort_message = std::string("initial constraint solve failed: ") + e.what();
    }

    std::ofstream csv(dir / "timeseries.csv");
    if (!csv) throw ConfigError("output.dir", "cannot write timeseries.csv in '" + dir.string() + "'");
    const auto cols = timeseries_columns(cfg.diagnostics);
    for (std::size_t k = 0; k < cols.size(); ++k) csv << (k ? "," : "") << cols[k];
    csv << '\n';

    if (sim) {
        res.steps = sim->steps_total();
        res.dt = sim->dt();
        BoxIntegral x;
        auto emit = [&] {
            res.records.push_back(record(sim->state(), sim->potential(), cfg.diagnostics, x));
            csv << timeseries_row(res.records.back()) << '\n';
        };
        auto snap = [&] {
            const std::string stem = snapshot::stem_for(sim->state().t);
            snapshot::write(sim->state(), dir, stem);
            snapshots.push_back(stem);
        };
        emit();
        if (log) *log << "run: " << res.steps << " steps of dt = " << res.dt << " on " << cfg.nx << "x" << cfg.ny << '\n';
        try {
            while (!sim->finished()) {
                sim->advance();
                const long k = sim->steps_done();
                if (k % cfg.monitor_every == 0 || sim->finished()) {
                    emit();
                    if (log) {
                        const auto& r = res.records.back();
                        *log << "t = " << r.t << "  E = " << detail::num(r.energy.total()) << "  J = " << r.j.total() << '\n';
                    }
                }
                if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 && !sim->finished()) snap();
            }
        } catch (const NumericalAbort& e) {
            res.exit_code = exit_code::numerical_abort;
            res.abort_message = e.what();
        } catch (const EllipticSolveError& e) {
            res.exit_code = exit_code::numerical_abort;
            res.abort_message = std::string(e.what()) + " at t = " + detail::num(sim->state().t);
        }
        res.t_reached = sim->state().t;
        snap();
    }
    csv.flush();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    std::ofstream meta(dir / "run.meta");
    if (!meta) throw ConfigError("output.dir", "cannot write run.meta in '" + dir.string() + "'");
    meta << "mcsh_version = " << version << '\n'
         << "timeseries_schema_version = " << timeseries_schema_version << '\n'
         << "snapshot_schema_version = " << snapshot::schema_version << '\n'
         << "fftw_version = " << fftw_version << '\n'
         << "zlib_version = " << zlibVersion() << '\n'
         << "compiler = " << __VERSION__ << '\n'
         << "status = " << (res.exit_code == exit_code::ok ? "completed" : "aborted") << '\n'
         << "exit_code = " << res.exit_code << '\n'
         << "abort_message = " << res.abort_message << '\n'
         << "t_reached = " << detail::num(res.t_reached) << '\n'
         << "steps = " << res.steps << '\n'
         << "dt = " << detail::num(res.dt) << '\n'
         << "seed = " << cfg.seed << '\n'
         << "dt_A0_method = " << detail::a0_rate_name(cfg.a0_rate) << '\n'
         << "potential_unbounded_below = " << (cfg.potential().unbounded_below() ? "true" : "false") << '\n'
         << "wall_time_s = " << detail::num(res.wall_seconds) << '\n';
    for (const auto& w : cfg.warnings()) meta << "warning = " << w << '\n';
    for (const auto& s : snapshots) meta << "snapshot = " << s << '\n';
    meta << "timeseries_columns = ";
    for (std::size_t k = 0; k < cols.size(); ++k) meta << (k ? "," : "") << cols[k];
    meta << "\n[config]\n" << cfg.source_text;
    if (!cfg.source_text.empty() && cfg.source_text.back() != '\n') meta << '\n';
    return res;
}

struct ConvergenceLevel {
    double h = 0.0;                                           // dt or dx of this level
    double error = 0.0;                                       // distance to the finest level
    double order = std::numeric_limits<double>::quiet_NaN();  // log2 of successive self-differences
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> temporal;
    std::vector<ConvergenceLevel> spatial;
};

namespace detail {

inline FieldState evolve(const RunConfig& cfg) {
    Simulation sim(cfg);
    while (!sim.finished()) sim.advance();
    return sim.state();
}

// Max-norm difference of the dynamic fields at the coarse grid points,
// relative to the max-norm of the fine state.
inline double sampled_distance(const FieldState& coarse, const FieldState& fine) {
    const int sx = fine.grid().nx() / coarse.grid().nx();
    const int sy = fine.grid().ny() / coarse.grid().ny();
    double diff = 0.0, scale = 0.0;
    auto cmp = [&](const auto& c, const auto& f) {
        for (int j = 0; j < coarse.grid().ny(); ++j) {
            for (int i = 0; i < coarse.grid().nx(); ++i) {
                diff = std::max(diff, static_cast<double>(std::abs(c(i, j) - f(i * sx, j * sy))));
                scale = std::max(scale, static_cast<double>(std::abs(f(i * sx, j * sy))));
            }
        }
    };
    cmp(coarse.phi, fine.phi);
    cmp(coarse.dt_phi, fine.dt_phi);
    cmp(coarse.n, fine.n);
    cmp(coarse.dt_n, fine.dt_n);
    for (int c = 0; c < 2; ++c) {
        cmp(coarse.a[c], fine.a[c]);
        cmp(coarse.dt_a[c], fine.dt_a[c]);
    }
    return scale > 0.0 ? diff / scale : diff;
}

inline void fill_orders(std::vector<ConvergenceLevel>& lv, const std::vector<double>& self_diff) {
    for (std::size_t l = 0; l + 1 < self_diff.size(); ++l) {
        if (self_diff[l] > 0.0 && self_diff[l + 1] > 0.0) lv[l].order = std::log2(self_diff[l] / self_diff[l + 1]);
    }
}

}  // namespace detail

/// Self-convergence under dt halving (fixed grid) and under grid doubling
/// (fixed dt from the finest grid). The band limit of the initial data is held
/// at a fixed absolute wavenumber so every grid sees the same data.
inline ConvergenceReport convergence(const RunConfig& cfg, int levels, bool temporal = true, bool spatial = true) {
    if (levels < 3) throw ConfigError("levels", "convergence needs at least 3 levels");
    ConvergenceReport rep;

    if (temporal) {
        const Grid g = cfg.grid();
        const double dt0 = cfg.schedule(g).second;
        std::vector<FieldState> st;
        for (int l = 0; l < levels; ++l) {
            RunConfig c = cfg;
            c.dt = dt0 / std::ldexp(1.0, l);
            st.push_back(detail::evolve(c));
            rep.temporal.push_back({c.dt, 0.0});
        }
        std::vector<double> self;
        for (int l = 0; l < levels; ++l) {
            rep.temporal[l].error = difference_norm(st[l], st.back());
            if (l + 1 < levels) self.push_back(difference_norm(st[l], st[l + 1]));
        }
        detail::fill_orders(rep.temporal, self);
    }

    if (spatial) {
        const double kmax0 = cfg.grid().k_max();
        RunConfig finest = cfg;
        finest.nx = cfg.nx << (levels - 1);
        finest.ny = cfg.ny << (levels - 1);
        const double dt = finest.schedule(finest.grid()).second;
        std::vector<FieldState> st;
        for (int l = 0; l < levels; ++l) {
            RunConfig c = cfg;
            c.nx = cfg.nx << l;
            c.ny = cfg.ny << l;
            c.dt = dt;
            c.cfl = 0.0;
            c.initial.band_limit = std::min(1.0, cfg.initial.band_limit * kmax0 / c.grid().k_max());
            st.push_back(detail::evolve(c));
            rep.spatial.push_back({c.grid().dx(), 0.0});
        }
        std::vector<double> self;
        for (int l = 0; l < levels; ++l) {
            rep.spatial[l].error = l + 1 < levels ? detail::sampled_distance(st[l], st.back()) : 0.0;
            if (l + 1 < levels) self.push_back(detail::sampled_distance(st[l], st[l + 1]));
        }
        detail::fill_orders(rep.spatial, self);
    }
    return rep;
}

inline void write_convergence(const ConvergenceReport& rep, const std::filesystem::path& dir) {
    detail::ensure_directory(dir);
    std::ofstream o(dir / "convergence.csv");
    if (!o) throw ConfigError("output.dir", "cannot write convergence.csv");
    o << "kind,level,h,error_vs_finest,observed_order\n";
    auto rows = [&](const char* kind, const std::vector<ConvergenceLevel>& lv) {
        for (std::size_t l = 0; l < lv.size(); ++l) {
            o << kind << ',' << l << ',' << detail::num(lv[l].h) << ',' << detail::num(lv[l].error) << ','
              << detail::num(lv[l].order) << '\n';
        }
    };
    rows("temporal", rep.temporal);
    rows("spatial", rep.spatial);
}

struct UniquenessSample {
    double t = 0.0;
    double diff_delta = 0.0;  // difference_norm(base, base + delta)
    double diff_half = 0.0;   // difference_norm(base, base + delta/2)
    bool valid = true;
};

struct UniquenessReport {
    double delta = 0.0;
    std::vector<UniquenessSample> samples;
    bool completed = true;
    double abort_time = std::numeric_limits<double>::quiet_NaN();
    std::string abort_message;

    /// diff_delta / diff_half at the last valid sample (NaN when undefined).
    double terminal_ratio() const {
        for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
            if (it->valid) return it->diff_half > 0.0 ? it->diff_delta / it->diff_half : std::numeric_limits<double>::quiet_NaN();
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
    bool linear_scaling() const {
        const double r = terminal_ratio();
        return completed && r >= 1.8 && r <= 2.2;
    }
};

/// Evolves the base data and the data perturbed by delta and delta/2 in lock
/// step, sampling the difference norms at the monitor cadence. If any run
/// aborts, later samples are marked invalid and the remaining runs stop.
inline UniquenessReport uniqueness_experiment(const RunConfig& cfg, double delta, std::ostream* log = nullptr) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta", "delta must be finite and >= 0");
    UniquenessReport rep;
    rep.delta = delta;
    std::vector<Simulation> sims;
    try {
        sims.emplace_back(cfg, 0.0);
        sims.emplace_back(cfg, delta);
        sims.emplace_back(cfg, 0.5 * delta);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("initial", e.what());
    } catch (const EllipticSolveError& e) {
        rep.completed = false;
        rep.abort_time = 0.0;
        rep.abort_message = std::string("initial constraint solve failed: ") + e.what();
        rep.samples.push_back({0.0, 0.0, 0.0, false});
        return rep;
    }
    auto sample = [&] {
        const FieldState& b = sims[0].state();
        rep.samples.push_back({b.t, difference_norm(b, sims[1].state()), difference_norm(b, sims[2].state()), true});
    };
    sample();
    while (!sims[0].finished()) {
        try {
            for (auto& s : sims) s.advance();
        } catch (const std::runtime_error& e) {
            rep.completed = false;
            rep.abort_time = sims[0].state().t;
            rep.abort_message = e.what();
            if (log) *log << "uniqueness: abort near t = " << rep.abort_time << ": " << e.what() << '\n';
            const long steps = sims[0].steps_total();
            for (long k = sims[0].steps_done() + 1; k <= steps; ++k) {
                if (k % cfg.monitor_every == 0 || k == steps) {
                    rep.samples.push_back({sims[0].time_at(k), std::numeric_limits<double>::quiet_NaN(),
                                           std::numeric_limits<double>::quiet_NaN(), false});
                }
            }
            return rep;
        }
        if (sims[0].steps_done() % cfg.monitor_every == 0 || sims[0].finished()) {
            sample();
            if (log) {
                const auto& s = rep.samples.back();
                *log << "t = " << s.t << "  d(delta) = " << s.diff_delta << "  d(delta/2) = " << s.diff_half << '\n';
            }
        }
    }
    return rep;
}

inline void write_uniqueness(const UniquenessReport& rep, const std::filesystem::path& dir) {
    detail::ensure_directory(dir);
    std::ofstream o(dir / "uniqueness.csv");
    if (!o) throw ConfigError("output.dir", "cannot write uniqueness.csv");
    o << "t,diff_delta,diff_half_delta,ratio,valid\n";
    for (const auto& s : rep.samples) {
        const double r = s.valid && s.diff_half > 0.0 ? s.diff_delta / s.diff_half : std::numeric_limits<double>::quiet_NaN();
        o << detail::num(s.t) << ',' << detail::num(s.diff_delta) << ',' << detail::num(s.diff_half) << ','
          << detail::num(r) << ',' << (s.valid ? 1 : 0) << '\n';
    }
    std::ofstream m(dir / "uniqueness.meta");
    m << "delta = " << detail::num(rep.delta) << '\n'
      << "completed = " << (rep.completed ? "true" : "false") << '\n'
      << "abort_time = " << detail::num(rep.abort_time) << '\n'
      << "abort_message = " << rep.abort_message << '\n'
      << "terminal_ratio = " << detail::num(rep.terminal_ratio()) << '\n'
      << "linear_scaling = " << (rep.linear_scaling() ? "true" : "false") << '\n';
}

}  // namespace mcsh
