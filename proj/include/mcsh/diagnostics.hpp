#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcsh/dynamics.hpp"
#include "mcsh/finite_difference.hpp"
#include "mcsh/potential.hpp"
#include "mcsh/spectral.hpp"

namespace mcsh {

struct EnergyParts {
    double em = 0.0;             // 1/2 (E^2 + B^2)
    double n_kinetic = 0.0;      // 1/2 (dt N)^2
    double n_gradient = 0.0;     // 1/2 |grad N|^2
    double phi_covariant = 0.0;  // 1/2 (|D0 phi|^2 + |D_i phi|^2)
    double potential = 0.0;      // V

    double total() const { return em + n_kinetic + n_gradient + phi_covariant + potential; }
};

namespace detail {

template <class T>
double integral_sq(const Field<T>& f) {
    const double v = l2_norm(f);
    return v * v;
}

inline double integral(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().cell_area();
}

}  // namespace detail

/// Quadrature of the symmetrised energy density
/// 1/2(E^2+B^2) + 1/2(dt N)^2 + 1/2|grad N|^2 + 1/2(|D0 phi|^2+|D_i phi|^2) + V.
inline EnergyParts total_energy(const FieldState& s, const PotentialSpec& spec) {
    const FieldStrength fs = field_strength(s);
    const CovariantDerivative cd = covariant_derivative(s);
    EnergyParts e;
    e.em = 0.5 * (detail::integral_sq(fs.e[0]) + detail::integral_sq(fs.e[1]) + detail::integral_sq(fs.b));
    e.n_kinetic = 0.5 * detail::integral_sq(s.dt_n);
    const VectorField gn = gradient(s.n);
    e.n_gradient = 0.5 * (detail::integral_sq(gn[0]) + detail::integral_sq(gn[1]));
    e.phi_covariant = 0.5 * (detail::integral_sq(cd.d0) + detail::integral_sq(cd.d[0]) + detail::integral_sq(cd.d[1]));
    e.potential = spec.is_zero() ? 0.0 : detail::integral(eval_V(s.phi, s.n, spec));
    return e;
}

/// Individual terms of the functional norm J. `total` sums every term except
/// `n_high`, which is logged alongside.
struct JNorm {
    double d_a = 0.0;      // ||d_mu A_nu||, all space-time first derivatives incl. A0
    double phi = 0.0;      // ||phi||
    double d_phi = 0.0;    // ||d_mu phi||
    double n = 0.0;        // ||N||
    double d_n = 0.0;      // ||d_mu N||
    double d2_a = 0.0, d3_a = 0.0, d4_a = 0.0;
    double d2_phi = 0.0, d3_phi = 0.0, d4_phi = 0.0;
    double n_high = 0.0;   // sum_{k=2..4} ||grad^k N||, not part of total

    double total() const { return d_a + phi + d_phi + n + d_n + d2_a + d3_a + d4_a + d2_phi + d3_phi + d4_phi; }
};

inline JNorm functional_J_terms(const FieldState& s) {
    JNorm j;
    const VectorField ga0 = gradient(s.a0);
    const VectorField ga1 = gradient(s.a[0]);
    const VectorField ga2 = gradient(s.a[1]);
    const double da2 = detail::integral_sq(s.dt_a0) + detail::integral_sq(ga0[0]) + detail::integral_sq(ga0[1]) +
                       detail::integral_sq(s.dt_a[0]) + detail::integral_sq(s.dt_a[1]) + detail::integral_sq(ga1[0]) +
                       detail::integral_sq(ga1[1]) + detail::integral_sq(ga2[0]) + detail::integral_sq(ga2[1]);
    j.d_a = std::sqrt(da2);
    j.phi = l2_norm(s.phi);
    j.d_phi = std::hypot(l2_norm(s.dt_phi), derivative_norm(s.phi, 1));
    j.n = l2_norm(s.n);
    j.d_n = std::hypot(l2_norm(s.dt_n), derivative_norm(s.n, 1));
    j.d2_a = derivative_norm(s.a, 2);
    j.d3_a = derivative_norm(s.a, 3);
    j.d4_a = derivative_norm(s.a, 4);
    j.d2_phi = derivative_norm(s.phi, 2);
    j.d3_phi = derivative_norm(s.phi, 3);
    j.d4_phi = derivative_norm(s.phi, 4);
    j.n_high = derivative_norm(s.n, 2) + derivative_norm(s.n, 3) + derivative_norm(s.n, 4);
    return j;
}

inline double functional_J(const FieldState& s) { return functional_J_terms(s).total(); }

struct GaugeResidual {
    double relative = 0.0;  // ||div A|| / ||grad A||
    double absolute = 0.0;  // ||div A||
};

inline GaugeResidual gauge_residual(const FieldState& s) {
    GaugeResidual r;
    r.absolute = l2_norm(divergence(s.a));
    const double grad_a = std::hypot(derivative_norm(s.a[0], 1), derivative_norm(s.a[1], 1));
    r.relative = grad_a > 0.0 ? r.absolute / grad_a : (r.absolute > 0.0 ? INFINITY : 0.0);
    return r;
}

/// ||lap A0 - kappa F^0 + Im(phi conj(D0 phi))|| with finite-difference
/// operators of the given order, independent of the spectral solver.
inline double gauss_residual(const FieldState& s, const PotentialSpec& spec, int fd_order = 20) {
    const ScalarField lap = fd::laplacian(s.a0, fd_order);
    const ScalarField b = fd::curl(s.a, fd_order);
    const double kappa = spec.kappa();
    const Complex i(0.0, 1.0);
    const ScalarField r = pointwise(
        [kappa, i](double l, double bv, Complex p, Complex pt, double a0) {
            return l - kappa * bv + std::imag(p * std::conj(pt + i * a0 * p));
        },
        lap, b, s.phi, s.dt_phi, s.a0);
    return l2_norm(r);
}

struct BoxNorms {
    double a = 0.0;
    double phi = 0.0;
    double n = 0.0;
    double sum() const { return a + phi + n; }
};

/// On-shell L2 norms of Box A, Box phi and Box N = dV/dN.
inline BoxNorms box_norms(const FieldState& s, const PotentialSpec& spec, Orientation o = Orientation::positive) {
    return {l2_norm(rhs_A(s, spec, o)), l2_norm(rhs_phi(s, spec)), l2_norm(dV_dN(s.phi, s.n, spec))};
}

/// J of the component-wise difference (A0 excluded).
inline double difference_norm(const FieldState& a, const FieldState& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("difference_norm: states live on different grids");
    if (a.t != b.t) throw std::invalid_argument("difference_norm: states are at different times");
    FieldState d(a.grid());
    d.t = a.t;
    d.phi = a.phi - b.phi;
    d.dt_phi = a.dt_phi - b.dt_phi;
    d.n = a.n - b.n;
    d.dt_n = a.dt_n - b.dt_n;
    d.a = a.a - b.a;
    d.dt_a = a.dt_a - b.dt_a;
    return functional_J(d);
}

struct GrowthFit {
    double ratio_max = 0.0;     // max J / (1+t)^2
    double exponent_fit = 0.0;  // slope of log J vs log(1+t) over the second half
};

inline GrowthFit growth_monitor(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 10) throw std::invalid_argument("growth_monitor: need at least 10 samples");
    GrowthFit g;
    for (const auto& [t, j] : series) g.ratio_max = std::max(g.ratio_max, j / ((1.0 + t) * (1.0 + t)));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t k = series.size() / 2; k < series.size(); ++k) {
        const auto [t, j] = series[k];
        if (!(j > 0.0)) continue;
        const double x = std::log1p(t);
        const double y = std::log(j);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double denom = count * sxx - sx * sx;
    if (count >= 2 && denom > 0.0) g.exponent_fit = (count * sxy - sx * sy) / denom;
    return g;
}

/// Trapezoid accumulation of X(T) = int_0^T (||Box A|| + ||Box phi|| + ||Box N||) dt.
class BoxIntegral {
public:
    void add(double t, double value) {
        if (has_last_) total_ += 0.5 * (t - last_t_) * (value + last_v_);
        last_t_ = t;
        last_v_ = value;
        has_last_ = true;
    }
    double value() const { return total_; }

private:
    double total_ = 0.0;
    double last_t_ = 0.0;
    double last_v_ = 0.0;
    bool has_last_ = false;
};

struct DiagnosticsSettings {
    std::vector<double> hs_exponents{1.0, 2.0};
    int fd_order = 20;
};

/// One row of the time series.
struct DiagnosticsRecord {
    double t = 0.0;
    EnergyParts energy;
    JNorm j;
    double j_over_growth = 0.0;
    GaugeResidual gauge;
    double gauss = 0.0;
    BoxNorms box;
    double x_accum = 0.0;
    double l2_phi = 0.0, l2_n = 0.0, l2_a = 0.0;
    std::vector<double> hs_phi;  // one per configured exponent
    int elliptic_iterations = 0;

    double energy_total() const { return energy.total(); }
    double j_norm() const { return j.total(); }
};

/// Computes a record and advances the X(T) accumulator.
inline DiagnosticsRecord record(const FieldState& s, const PotentialSpec& spec, const DiagnosticsSettings& cfg, BoxIntegral& x) {
    DiagnosticsRecord r;
    r.t = s.t;
    r.energy = total_energy(s, spec);
    r.j = functional_J_terms(s);
    r.j_over_growth = r.j.total() / ((1.0 + s.t) * (1.0 + s.t));
    r.gauge = gauge_residual(s);
    r.gauss = gauss_residual(s, spec, cfg.fd_order);
    r.box = box_norms(s, spec);
    x.add(s.t, r.box.sum());
    r.x_accum = x.value();
    r.l2_phi = l2_norm(s.phi);
    r.l2_n = l2_norm(s.n);
    r.l2_a = l2_norm(s.a);
    for (double e : cfg.hs_exponents) r.hs_phi.push_back(hs_norm(s.phi, e));
    r.elliptic_iterations = s.solve_report.iterations;
    return r;
}

}  // namespace mcsh
