#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mcsh/diagnostics.hpp"
#include "mcsh/finite_difference.hpp"
#include "mcsh/initial_data.hpp"
#include "mcsh/snapshot.hpp"

namespace mcsh {

/// Deliberate defects used to confirm that the corresponding check notices them.
struct SelftestMutations {
    bool flip_projection_sign = false;  // leray_project returns +(I - kk/|k|^2)
    bool flip_orientation = false;      // dynamics run with epsilon^{012} = -1
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace selftest_detail {

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

inline ScalarField smooth_field(const Grid& g, double phase) {
    return ScalarField::sample(g, [&](double x, double y) {
        const double kx = 2.0 * std::numbers::pi / g.lx();
        const double ky = 2.0 * std::numbers::pi / g.ly();
        return std::sin(kx * x + phase) * std::cos(2.0 * ky * y) + 0.5 * std::cos(3.0 * kx * x - ky * y + phase);
    });
}

inline ScalarField random_smooth(const Grid& g, std::mt19937_64& rng) { return detail::random_band_limited(g, rng, 5); }

inline InitialDataSpec packet() {
    InitialDataSpec s;
    s.phi_amplitude = 0.5;
    s.phi_rate_amplitude = 0.3;
    s.n_amplitude = 0.3;
    s.n_rate_amplitude = 0.1;
    s.a_amplitude = 0.2;
    s.a_rate_amplitude = 0.1;
    s.a_angle = 0.6;
    s.width = 3.0;
    s.band_limit = 0.25;
    return s;
}

}  // namespace selftest_detail

/// Runs the oracle checks on small grids. Every check runs even if an earlier one fails.
inline std::vector<CheckResult> run_selftest(const SelftestMutations& mut = {}, std::ostream* log = nullptr) {
    using namespace selftest_detail;
    std::vector<CheckResult> out;
    auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        r.name = name;
        try {
            std::tie(r.passed, r.detail) = fn();
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log) *log << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        out.push_back(std::move(r));
    };
    auto project = [&](const VectorField& b) {
        VectorField p = leray_project(b);
        if (mut.flip_projection_sign) p *= -1.0;
        return p;
    };

    const Grid g32(32, 32, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);

    check("spectral-derivative", [&] {
        const ScalarField f = ScalarField::sample(g32, [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); });
        const ScalarField fx = ScalarField::sample(g32, [](double x, double y) { return 3 * std::cos(3 * x) * std::cos(2 * y); });
        const ScalarField lap = ScalarField::sample(g32, [](double x, double y) { return -13 * std::sin(3 * x) * std::cos(2 * y); });
        const double e1 = max_abs(gradient(f)[0] - fx);
        const double e2 = max_abs(laplacian(f) - lap);
        return std::pair{e1 < 1e-12 && e2 < 1e-11, fmt("d/dx err %.2e, laplacian err %.2e", e1, e2)};
    });

    check("finite-difference-oracle", [&] {
        // 4th-order FD vs spectral: the error must fall by ~16x per grid doubling
        double prev = 0.0, order = 0.0;
        for (int n : {32, 64, 128}) {
            const Grid g(n, n, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
            const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(std::sin(x) + 0.5 * std::cos(y)); });
            const double e = l2_norm(fd::d_dx(f, 4) - gradient(f)[0]);
            if (prev > 0.0) order = std::log2(prev / e);
            prev = e;
        }
        return std::pair{order >= 3.5, fmt("observed order %.2f (finest err %.2e)", order, prev)};
    });

    check("projection-identity", [&] {
        std::mt19937_64 rng(7);
        double div_err = 0.0, minus_err = 0.0, idem_err = 0.0;
        for (int k = 0; k < 10; ++k) {
            const VectorField b(random_smooth(g32, rng), random_smooth(g32, rng));
            const VectorField pb = project(b);
            div_err = std::max(div_err, l2_norm(divergence(pb)));
            VectorField ppb = project(pb);
            ppb += pb;
            idem_err = std::max(idem_err, l2_norm(ppb) / l2_norm(pb));
            const VectorField sol = skew_gradient(random_smooth(g32, rng));
            VectorField psol = project(sol);
            psol += sol;
            minus_err = std::max(minus_err, l2_norm(psol) / l2_norm(sol));
        }
        const bool ok = div_err <= 1e-10 && minus_err <= 1e-12 && idem_err <= 1e-12;
        return std::pair{ok, fmt("div %.2e, |PB+B|/|B| %.2e, |P^2B+PB|/|PB| %.2e", div_err, minus_err, idem_err)};
    });

    check("poisson-roundtrip", [&] {
        const ScalarField f = smooth_field(g32, 0.3);
        const ScalarField u = solve_poisson(f);
        const double e = max_abs(laplacian(u) - f);
        return std::pair{e < 1e-12, fmt("|lap u - f| %.2e", e)};
    });

    check("constraint-residual", [&] {
        const Grid g(96, 96, 48.0, 48.0);
        const auto spec = PotentialSpec::single(1, 1, 0.5, 1.0);
        const FieldState s = make_initial_data(packet(), g, spec);
        const double r = gauss_residual(s, spec);
        return std::pair{r <= 1e-9 && s.solve_report.converged,
                         fmt("FD Gauss residual %.2e after %d CG iterations", r, s.solve_report.iterations)};
    });

    check("potential-gradient", [&] {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        const Grid g(8, 8, 1.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> alpha(9);
            for (double& a : alpha) a = u(rng);
            const PotentialSpec spec(3, 3, alpha, 1.0);
            const ComplexField phi = ComplexField::sample(g, [&](double, double) { return Complex(u(rng), u(rng)); });
            const ScalarField n = ScalarField::sample(g, [&](double, double) { return u(rng); });
            const ComplexField dphi = dV_dphi(phi, n, spec);
            const ScalarField dn = dV_dN(phi, n, spec);
            const double h = 1e-6;
            for (std::size_t k = 0; k < g.size(); ++k) {
                auto v = [&](Complex p, double nn) {
                    return eval_V(ComplexField(g, std::vector<Complex>(g.size(), p)), ScalarField(g, std::vector<double>(g.size(), nn)), spec)[0];
                };
                const Complex p = phi[k];
                const double dre = (v(p + h, n[k]) - v(p - h, n[k])) / (2 * h);
                const double dim = (v(p + Complex(0, h), n[k]) - v(p - Complex(0, h), n[k])) / (2 * h);
                const Complex wirtinger = 0.5 * Complex(dre, dim);
                const double dnn = (v(p, n[k] + h) - v(p, n[k] - h)) / (2 * h);
                worst = std::max({worst, std::abs(wirtinger - dphi[k]), std::abs(dnn - dn[k])});
            }
        }
        return std::pair{worst <= 1e-6, fmt("max FD mismatch %.2e", worst)};
    });

    check("free-wave-dispersion", [&] {
        const Grid g(32, 32, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
        const auto spec = PotentialSpec::none(1e-12);
        InitialDataSpec id;
        id.kind = InitialKind::single_mode;
        id.n_amplitude = 1.0;
        id.mode_x = 2;
        id.mode_y = 1;
        FieldState s = make_initial_data(id, g, spec);
        const double omega = std::sqrt(5.0);
        const int steps = 200;
        const double dt = 2.0 * std::numbers::pi / omega / steps;
        for (int k = 0; k < steps; ++k) s = step(s, dt, spec);
        const ScalarField exact = ScalarField::sample(g, [&](double x, double y) { return std::sin(2 * x + y) * std::cos(omega * s.t); });
        const double e = max_abs(s.n - exact);
        return std::pair{e < 1e-7, fmt("max error after one period %.2e (dt %.3f)", e, dt)};
    });

    check("energy-drift", [&] {
        const Grid g(96, 96, 48.0, 48.0);
        const auto spec = PotentialSpec::single(1, 1, 0.5, 1.0);
        StepOptions opt;
        if (mut.flip_orientation) opt.orientation = Orientation::negative;
        FieldState s = make_initial_data(packet(), g, spec, opt);
        const double e0 = total_energy(s, spec).total();
        const double dt = 0.0625 * g.dx();
        double drift = 0.0;
        for (int k = 0; k < 32; ++k) {
            s = step(s, dt, spec, opt);
            drift = std::max(drift, std::abs(total_energy(s, spec).total() - e0) / e0);
        }
        return std::pair{drift <= 1e-7, fmt("max relative drift %.2e over t = %.2f", drift, s.t)};
    });

    check("gauge-preservation", [&] {
        const Grid g(32, 32, 16.0, 16.0);
        const auto spec = PotentialSpec::single(1, 1, 0.5, 1.0);
        InitialDataSpec id = packet();
        id.width = 2.0;
        FieldState s = make_initial_data(id, g, spec);
        double worst = gauge_residual(s).relative;
        for (int k = 0; k < 8; ++k) {
            s = step(s, 0.25 * g.dx(), spec);
            worst = std::max(worst, gauge_residual(s).relative);
        }
        const double img = l2_norm(divergence(rhs_A(s, spec)));
        return std::pair{worst <= 1e-8 && img <= 1e-10, fmt("max |div A|/|grad A| %.2e, |div rhs_A| %.2e", worst, img)};
    });

    check("snapshot-roundtrip", [&] {
        const Grid g(16, 16, 8.0, 8.0);
        const auto spec = PotentialSpec::single(1, 1, 0.5, 1.0);
        InitialDataSpec id = packet();
        id.width = 1.5;
        id.band_limit = 1.0;
        FieldState s = make_initial_data(id, g, spec);
        s.t = 0.1;
        const auto dir = std::filesystem::temp_directory_path() /
                         ("mcsh_selftest_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        std::filesystem::create_directories(dir);
        snapshot::write(s, dir, snapshot::stem_for(s.t));
        const FieldState r = snapshot::read(dir / (snapshot::stem_for(s.t) + ".bin"));
        std::filesystem::remove_all(dir);
        const bool same = r.t == s.t && r.phi == s.phi && r.dt_phi == s.dt_phi && r.n == s.n && r.dt_n == s.dt_n &&
                          r.a[0] == s.a[0] && r.a[1] == s.a[1] && r.dt_a[0] == s.dt_a[0] && r.dt_a[1] == s.dt_a[1] &&
                          r.a0 == s.a0 && r.dt_a0 == s.dt_a0;
        return std::pair{same, std::string(same ? "bit-exact" : "payload differs after round trip")};
    });

    return out;
}

}  // namespace mcsh
