#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "mcsh/dynamics.hpp"
#include "mcsh/snapshot.hpp"

namespace mcsh {

enum class InitialKind { gaussian_packet, vortex_like, single_mode, from_snapshot };

/// Parameters for the six data fields a_(0), a_(1), phi_(0), phi_(1),
/// n_(0), n_(1). Zero amplitudes everywhere give the zero state.
struct InitialDataSpec {
    InitialKind kind = InitialKind::gaussian_packet;

    double phi_amplitude = 0.0;
    double phi_rate_amplitude = 0.0;   // phi_1 = -i * this * profile
    double n_amplitude = 0.0;
    double n_rate_amplitude = 0.0;
    double a_amplitude = 0.0;
    double a_rate_amplitude = 0.0;
    double a_angle = 0.0;              // orientation of a_0 before projection (radians)

    double width = 1.0;
    double x0 = -1.0;                  // negative: torus centre
    double y0 = -1.0;
    double carrier_kx = 0.0;           // phase e^{i k.(x - x0)} on phi
    double carrier_ky = 0.0;
    int winding = 1;                   // vortex_like
    int mode_x = 1;                    // single_mode
    int mode_y = 0;

    double noise_amplitude = 0.0;      // band-limited random addition to phi and N
    int noise_modes = 4;
    std::uint64_t seed = 0;

    double band_limit = 1.0;           // keep |k| <= band_limit * k_max
    int smoothing_order = 0;           // exp(-(|k|/k_cut)^(2s)) mollifier when > 0

    double perturbation = 0.0;         // adds delta * (fixed offset bump) to phi, N and A
    std::string snapshot_path;

    void validate(const Grid& g) const {
        auto finite = [](double v) { return std::isfinite(v); };
        for (double v : {phi_amplitude, phi_rate_amplitude, n_amplitude, n_rate_amplitude, a_amplitude, a_rate_amplitude,
                         a_angle, carrier_kx, carrier_ky, noise_amplitude, perturbation, x0, y0}) {
            if (!finite(v)) throw std::invalid_argument("initial data: parameters must be finite");
        }
        if (!(width > 0.0)) throw std::invalid_argument("initial data: width must be > 0");
        if (!(band_limit > 0.0) || band_limit > 1.0) throw std::invalid_argument("initial data: band_limit must lie in (0, 1]");
        if (smoothing_order < 0) throw std::invalid_argument("initial data: smoothing_order must be >= 0");
        if (noise_modes < 1 || 2 * noise_modes >= std::min(g.nx(), g.ny())) {
            throw std::invalid_argument("initial data: noise_modes out of range");
        }
        if (kind == InitialKind::from_snapshot && snapshot_path.empty()) {
            throw std::invalid_argument("initial data: from_snapshot needs a snapshot path");
        }
    }

    /// True when the width is under two grid spacings (poorly resolved).
    bool under_resolved(const Grid& g) const { return width < 2.0 * std::max(g.dx(), g.dy()); }
};

namespace detail {

inline double periodic_offset(double x, double centre, double l) {
    double d = std::fmod(x - centre, l);
    if (d > 0.5 * l) d -= l;
    if (d < -0.5 * l) d += l;
    return d;
}

struct Placement {
    double x0, y0, w;
};

inline Placement placement(const InitialDataSpec& spec, const Grid& g) {
    return {spec.x0 < 0.0 ? 0.5 * g.lx() : spec.x0, spec.y0 < 0.0 ? 0.5 * g.ly() : spec.y0, spec.width};
}

inline ScalarField gaussian(const Grid& g, double x0, double y0, double w) {
    return ScalarField::sample(g, [&](double x, double y) {
        const double dx = periodic_offset(x, x0, g.lx());
        const double dy = periodic_offset(y, y0, g.ly());
        return std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
    });
}

/// Real band-limited random field with modes |m| <= max_mode, unit-ish amplitude.
inline ScalarField random_band_limited(const Grid& g, std::mt19937_64& rng, int max_mode) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Spectrum s(g);
    // draw in mode order so the same seed gives the same field on every grid
    for (int my = -max_mode; my <= max_mode; ++my) {
        for (int mx = -max_mode; mx <= max_mode; ++mx) {
            const int i = (mx + g.nx()) % g.nx();
            const int j = (my + g.ny()) % g.ny();
            s[static_cast<std::size_t>(j) * g.nx() + i] = Complex(normal(rng), normal(rng)) * static_cast<double>(g.size());
        }
    }
    ScalarField f = to_physical<double>(s);
    const double rms = l2_norm(f) / std::sqrt(g.area());
    if (rms > 0.0) f *= 1.0 / rms;
    return f;
}

inline VectorField purify(const VectorField& a) {
    VectorField p = leray_project(a);
    p *= -1.0;
    return p;
}

}  // namespace detail

/// Builds constraint-satisfying data: the A data are replaced by -P a so
/// they are divergence-free, then A0 (and dt_A0 for the elliptic rate) is
/// solved from the constraint. For the lagged rate dt_A0 starts at zero.
inline FieldState make_initial_data(const InitialDataSpec& spec, const Grid& g, const PotentialSpec& potential,
                                    const StepOptions& opt = {}) {
    spec.validate(g);
    FieldState s(g);
    const auto [x0, y0, w] = detail::placement(spec, g);
    const Complex i(0.0, 1.0);

    switch (spec.kind) {
        case InitialKind::gaussian_packet:
        case InitialKind::vortex_like: {
            const ScalarField env = detail::gaussian(g, x0, y0, w);
            const ComplexField carrier = ComplexField::sample(g, [&](double x, double y) {
                const double dx = detail::periodic_offset(x, x0, g.lx());
                const double dy = detail::periodic_offset(y, y0, g.ly());
                return std::exp(i * (spec.carrier_kx * dx + spec.carrier_ky * dy));
            });
            ComplexField profile = pointwise([](double e, Complex c) { return e * c; }, env, carrier);
            if (spec.kind == InitialKind::vortex_like) {
                const ComplexField z = ComplexField::sample(g, [&](double x, double y) {
                    const Complex r(detail::periodic_offset(x, x0, g.lx()) / w, detail::periodic_offset(y, y0, g.ly()) / w);
                    const Complex base = spec.winding >= 0 ? r : std::conj(r);
                    return std::pow(base, std::abs(spec.winding));
                });
                profile *= z;
            }
            s.phi = profile;
            s.phi *= Complex(spec.phi_amplitude);
            s.dt_phi = profile;
            s.dt_phi *= -i * spec.phi_rate_amplitude;
            s.n = spec.n_amplitude * env;
            s.dt_n = spec.n_rate_amplitude * env;
            const double c = std::cos(spec.a_angle);
            const double sn = std::sin(spec.a_angle);
            s.a = VectorField(spec.a_amplitude * c * env, spec.a_amplitude * sn * env);
            s.dt_a = VectorField(-spec.a_rate_amplitude * sn * env, spec.a_rate_amplitude * c * env);
            break;
        }
        case InitialKind::single_mode: {
            const double kx = 2.0 * std::numbers::pi * spec.mode_x / g.lx();
            const double ky = 2.0 * std::numbers::pi * spec.mode_y / g.ly();
            const double kk = std::hypot(kx, ky);
            if (kk == 0.0) throw std::invalid_argument("initial data: single_mode needs a non-zero mode");
            const auto phase = [&](double x, double y) { return kx * x + ky * y; };
            s.phi = ComplexField::sample(g, [&](double x, double y) { return spec.phi_amplitude * std::exp(i * phase(x, y)); });
            s.dt_phi = ComplexField::sample(g, [&](double x, double y) {
                return -i * spec.phi_rate_amplitude * std::exp(i * phase(x, y));
            });
            s.n = ScalarField::sample(g, [&](double x, double y) { return spec.n_amplitude * std::sin(phase(x, y)); });
            s.dt_n = ScalarField::sample(g, [&](double x, double y) { return spec.n_rate_amplitude * std::cos(phase(x, y)); });
            // stream functions psi with |grad psi| = amplitude; A = (-d2 psi, d1 psi)
            s.a = skew_gradient(ScalarField::sample(g, [&](double x, double y) { return spec.a_amplitude * std::sin(phase(x, y)) / kk; }));
            s.dt_a = skew_gradient(ScalarField::sample(g, [&](double x, double y) { return spec.a_rate_amplitude * std::cos(phase(x, y)) / kk; }));
            break;
        }
        case InitialKind::from_snapshot: {
            FieldState snap = snapshot::read(spec.snapshot_path);
            if (!(snap.grid() == g)) throw std::invalid_argument("initial data: snapshot grid does not match the run grid");
            s = std::move(snap);
            break;
        }
    }

    if (spec.noise_amplitude != 0.0) {
        std::mt19937_64 rng(spec.seed);
        const ScalarField re = detail::random_band_limited(g, rng, spec.noise_modes);
        const ScalarField im = detail::random_band_limited(g, rng, spec.noise_modes);
        const ScalarField nn = detail::random_band_limited(g, rng, spec.noise_modes);
        s.phi += pointwise([a = spec.noise_amplitude](double r, double m) { return Complex(a * r, a * m); }, re, im);
        s.n.axpy(spec.noise_amplitude, nn);
    }

    if (spec.perturbation != 0.0) {
        const ScalarField bump = detail::gaussian(g, x0 + w, y0, w);
        s.phi += to_complex(spec.perturbation * bump);
        s.n.axpy(spec.perturbation, bump);
        s.a.axpy(spec.perturbation, VectorField(bump, ScalarField(g)));
    }

    if (spec.band_limit < 1.0 || spec.smoothing_order > 0) {
        const double kc = spec.band_limit * g.k_max();
        const int so = spec.smoothing_order;
        s.phi = band_limit(s.phi, kc, so);
        s.dt_phi = band_limit(s.dt_phi, kc, so);
        s.n = band_limit(s.n, kc, so);
        s.dt_n = band_limit(s.dt_n, kc, so);
        s.a = VectorField(band_limit(s.a[0], kc, so), band_limit(s.a[1], kc, so));
        s.dt_a = VectorField(band_limit(s.dt_a[0], kc, so), band_limit(s.dt_a[1], kc, so));
    }

    s.a = detail::purify(s.a);
    s.dt_a = detail::purify(s.dt_a);
    s.a0 = ScalarField(g);
    s.dt_a0 = ScalarField(g);
    solve_constraints(s, potential, opt);
    return s;
}

}  // namespace mcsh
