// Command-line driver: run, convergence, uniqueness, selftest.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mcsh/mcsh.hpp"

namespace {

struct Globals {
    std::optional<std::string> out;
    std::optional<long long> seed;
    int threads = 1;
};

mcsh::RunConfig load(const std::string& path, const Globals& g) {
    mcsh::RunConfig cfg = mcsh::parse_config(path);
    if (g.out) cfg.output_dir = *g.out;
    if (g.seed) {
        if (*g.seed < 0) throw mcsh::ConfigError("--seed", "must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(*g.seed);
        cfg.initial.seed = cfg.seed;
    }
    return cfg;
}

int cmd_run(const std::string& path, const Globals& g) {
    const mcsh::RunConfig cfg = load(path, g);
    for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << '\n';
    const mcsh::RunResult r = mcsh::run(cfg, &std::cout);
    if (r.exit_code != mcsh::exit_code::ok) {
        std::cerr << "numerical abort: " << r.abort_message << '\n';
    } else {
        std::cout << "completed t = " << r.t_reached << " in " << r.wall_seconds << " s; output in " << cfg.output_dir << '\n';
    }
    return r.exit_code;
}

int cmd_convergence(const std::string& path, int levels, const Globals& g) {
    const mcsh::RunConfig cfg = load(path, g);
    const mcsh::ConvergenceReport rep = mcsh::convergence(cfg, levels);
    auto table = [](const char* title, const char* h, const std::vector<mcsh::ConvergenceLevel>& lv) {
        std::printf("%s\n  %-5s %-14s %-14s %s\n", title, "level", h, "err_vs_finest", "order");
        for (std::size_t l = 0; l < lv.size(); ++l) {
            std::printf("  %-5zu %-14.6e %-14.6e %.3f\n", l, lv[l].h, lv[l].error, lv[l].order);
        }
    };
    table("temporal (dt halving)", "dt", rep.temporal);
    table("spatial (grid doubling)", "dx", rep.spatial);
    mcsh::write_convergence(rep, cfg.output_dir);
    return mcsh::exit_code::ok;
}

int cmd_uniqueness(const std::string& path, double delta, const Globals& g) {
    const mcsh::RunConfig cfg = load(path, g);
    const mcsh::UniquenessReport rep = mcsh::uniqueness_experiment(cfg, delta, &std::cout);
    mcsh::write_uniqueness(rep, cfg.output_dir);
    std::printf("terminal ratio d(delta)/d(delta/2) = %.6f (%s)\n", rep.terminal_ratio(),
                rep.linear_scaling() ? "linear scaling" : "outside [1.8, 2.2]");
    if (!rep.completed) {
        std::cerr << "numerical abort at t = " << rep.abort_time << ": " << rep.abort_message << '\n';
        return mcsh::exit_code::numerical_abort;
    }
    return mcsh::exit_code::ok;
}

int cmd_selftest(const mcsh::SelftestMutations& mut) {
    const auto results = mcsh::run_selftest(mut, &std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::printf("%zu checks, %d failed\n", results.size(), failed);
    return failed == 0 ? mcsh::exit_code::ok : mcsh::exit_code::selftest_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maxwell-Chern-Simons-Higgs (2+1)D Coulomb-gauge solver"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--out", g.out, "output directory (overrides output.dir)");
    app.add_option("--seed", g.seed, "random seed (overrides run.seed)");
    app.add_option("--threads", g.threads, "worker threads for field kernels")->check(CLI::PositiveNumber);

    std::string config;
    int levels = 3;
    double delta = 1e-3;
    std::string inject;

    auto* run = app.add_subcommand("run", "evolve a configuration to t_end");
    run->add_option("config", config, "config file")->required();
    auto* conv = app.add_subcommand("convergence", "temporal and spatial self-convergence study");
    conv->add_option("config", config, "config file")->required();
    conv->add_option("--levels", levels, "refinement levels (>= 3)");
    auto* uniq = app.add_subcommand("uniqueness", "paired runs perturbed by delta and delta/2");
    uniq->add_option("config", config, "config file")->required();
    uniq->add_option("--delta", delta, "perturbation amplitude (>= 0)");
    auto* self = app.add_subcommand("selftest", "oracle checks on small grids");
    self->add_option("--inject", inject, "deliberate defect for mutation testing")
        ->check(CLI::IsMember({"projection-sign", "orientation"}))
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : mcsh::exit_code::config_error;
    }

#ifdef _OPENMP
    omp_set_num_threads(g.threads);
#endif

    try {
        if (*run) return cmd_run(config, g);
        if (*conv) return cmd_convergence(config, levels, g);
        if (*uniq) return cmd_uniqueness(config, delta, g);
        mcsh::SelftestMutations mut;
        mut.flip_projection_sign = inject == "projection-sign";
        mut.flip_orientation = inject == "orientation";
        return cmd_selftest(mut);
    } catch (const mcsh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return mcsh::exit_code::config_error;
    } catch (const mcsh::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return mcsh::exit_code::numerical_abort;
    } catch (const mcsh::EllipticSolveError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return mcsh::exit_code::numerical_abort;
    }
}
