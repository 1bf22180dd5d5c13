#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "mcsh/elliptic.hpp"
#include "mcsh/grid.hpp"
#include "mcsh/potential.hpp"
#include "mcsh/spectral.hpp"

namespace mcsh {

/// All dynamic variables at one instant. A0 is constrained (recomputed from
/// the other fields); dt_A0 is its time derivative, obtained either from the
/// differentiated constraint or by a lagged backward difference.
struct FieldState {
    double t = 0.0;
    ComplexField phi;
    ComplexField dt_phi;
    ScalarField n;
    ScalarField dt_n;
    VectorField a;
    VectorField dt_a;
    ScalarField a0;
    ScalarField dt_a0;
    EllipticSolveReport solve_report{};

    explicit FieldState(const Grid& g)
        : phi(g), dt_phi(g), n(g), dt_n(g), a(g), dt_a(g), a0(g), dt_a0(g) {}

    const Grid& grid() const { return phi.grid(); }

    /// Name of the first non-finite component, or empty.
    std::string first_non_finite() const {
        if (!phi.all_finite()) return "phi";
        if (!dt_phi.all_finite()) return "dt_phi";
        if (!n.all_finite()) return "N";
        if (!dt_n.all_finite()) return "dt_N";
        if (!a.all_finite()) return "A";
        if (!dt_a.all_finite()) return "dt_A";
        if (!a0.all_finite()) return "A0";
        if (!dt_a0.all_finite()) return "dt_A0";
        return {};
    }
};

/// Sign of epsilon^{012}. Physical runs use +1; the other value exists so
/// the self-test can check that a flipped orientation is caught.
enum class Orientation { positive = 1, negative = -1 };

inline double sign_of(Orientation o) { return o == Orientation::positive ? 1.0 : -1.0; }

/// How dt_A0 is obtained at each Runge-Kutta stage.
enum class A0Rate {
    elliptic,  // d/dt of the constraint: lap dt_A0 = kappa dt_B - Im(phi conj R) + 2 Re(conj(phi) dt_phi) A0
    lagged,    // backward difference across the previous full step, frozen over the stages
};

struct StepOptions {
    EllipticTolerances tol{};
    A0Rate a0_rate = A0Rate::elliptic;
    Orientation orientation = Orientation::positive;
};

/// Raised when the integrator produces non-finite values.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FieldStrength {
    VectorField e;  // E_i = dt A_i - d_i A0
    ScalarField b;  // B = d1 A2 - d2 A1
};

inline FieldStrength field_strength(const FieldState& s) {
    const VectorField grad_a0 = gradient(s.a0);
    return {s.dt_a - grad_a0, curl(s.a)};
}

struct DualField {
    ScalarField f0;
    ScalarField f1;
    ScalarField f2;
};

/// F^nu = 1/2 eps^{nu rho sigma} F_{rho sigma}: (B, -E2, E1) for eps^{012} = +1.
inline DualField dual_F(const FieldState& s, Orientation o = Orientation::positive) {
    FieldStrength fs = field_strength(s);
    const double sg = sign_of(o);
    fs.b *= sg;
    fs.e[1] *= -sg;
    fs.e[0] *= sg;
    return {std::move(fs.b), std::move(fs.e[1]), std::move(fs.e[0])};
}

struct CovariantDerivative {
    ComplexField d0;         // dt phi + i A0 phi
    ComplexVectorField d;    // d_i phi + i A_i phi
};

inline CovariantDerivative covariant_derivative(const FieldState& s) {
    const ComplexVectorField grad_phi = gradient(s.phi);
    const Complex i(0.0, 1.0);
    auto d0 = pointwise([i](Complex pt, double a0, Complex p) { return pt + i * a0 * p; }, s.dt_phi, s.a0, s.phi);
    auto d1 = pointwise([i](Complex g, double ai, Complex p) { return g + i * ai * p; }, grad_phi[0], s.a[0], s.phi);
    auto d2 = pointwise([i](Complex g, double ai, Complex p) { return g + i * ai * p; }, grad_phi[1], s.a[1], s.phi);
    return {std::move(d0), ComplexVectorField(std::move(d1), std::move(d2))};
}

namespace detail {

// Spatial derivatives shared by the right-hand sides of one stage.
struct Kinematics {
    ComplexVectorField grad_phi;
    ScalarField div_a;

    explicit Kinematics(const FieldState& s) : grad_phi(gradient(s.phi)), div_a(divergence(s.a)) {}
};

// Box phi with the given dt_A0:
//   2 dV/dconj(phi) - i A_mu D^mu phi - i d_mu(A^mu phi)
// with A_mu D^mu phi = -A0 D0 phi + A.D phi and
// d_mu(A^mu phi) = -(dt_A0 phi + A0 dt_phi) + phi div A + A.grad phi.
inline ComplexField box_phi(const FieldState& s, const Kinematics& k, const ScalarField& dt_a0, const PotentialSpec& spec) {
    const ComplexField dv = dV_dphi(s.phi, s.n, spec);
    const Grid& g = s.grid();
    ComplexField out(g);
    const Complex i(0.0, 1.0);
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto u = static_cast<std::size_t>(kk);
        const Complex p = s.phi[u];
        const Complex pt = s.dt_phi[u];
        const double a0 = s.a0[u];
        const double a1 = s.a[0][u];
        const double a2 = s.a[1][u];
        const Complex g1 = k.grad_phi[0][u];
        const Complex g2 = k.grad_phi[1][u];
        const Complex d0 = pt + i * a0 * p;
        const Complex d1 = g1 + i * a1 * p;
        const Complex d2 = g2 + i * a2 * p;
        const Complex a_dot_d = -a0 * d0 + a1 * d1 + a2 * d2;
        const Complex div_aphi = -(dt_a0[u] * p + a0 * pt) + p * k.div_a[u] + a1 * g1 + a2 * g2;
        out[u] = 2.0 * dv[u] - i * a_dot_d - i * div_aphi;
    }
    return dealias(out);
}

// Matter current Im(phi conj(D_i phi)) = Im(phi conj(d_i phi)) - A_i |phi|^2, dealiased.
inline VectorField matter_current(const FieldState& s, const Kinematics& k) {
    auto j1 = pointwise([](Complex p, Complex g, double ai) { return std::imag(p * std::conj(g)) - ai * std::norm(p); }, s.phi,
                        k.grad_phi[0], s.a[0]);
    auto j2 = pointwise([](Complex p, Complex g, double ai) { return std::imag(p * std::conj(g)) - ai * std::norm(p); }, s.phi,
                        k.grad_phi[1], s.a[1]);
    return VectorField(dealias(j1), dealias(j2));
}

inline VectorField box_a(const FieldState& s, const Kinematics& k, const PotentialSpec& spec, Orientation o) {
    const DualField f = dual_F(s, o);
    VectorField src = matter_current(s, k);
    src[0].axpy(spec.kappa(), f.f1);
    src[1].axpy(spec.kappa(), f.f2);
    return leray_project(src);
}

inline ScalarField accel_n(const FieldState& s, const PotentialSpec& spec) {
    return laplacian(s.n) - dealias(dV_dN(s.phi, s.n, spec));
}

// dt_A0 from the time-differentiated constraint. With
// phi_tt = R - i dt_A0 phi the |phi|^2 dt_A0 terms cancel and
//   lap dt_A0 = kappa curl(dt_A) - Im(phi conj R) + 2 Re(conj(phi) dt_phi) A0.
inline ScalarField a0_rate_elliptic(const FieldState& s, const ComplexField& r, const PotentialSpec& spec) {
    const ScalarField dt_b = curl(s.dt_a);
    const double kappa = spec.kappa();
    ScalarField src = pointwise(
        [kappa](double db, Complex p, Complex rr, Complex pt, double a0) {
            return kappa * db - std::imag(p * std::conj(rr)) + 2.0 * std::real(std::conj(p) * pt) * a0;
        },
        dt_b, s.phi, r, s.dt_phi, s.a0);
    return solve_poisson(src);
}

}  // namespace detail

/// Box A = P{kappa F^i + Im(phi conj(D_i phi))}, P the divergence-free projector (P B = -B).
inline VectorField rhs_A(const FieldState& s, const PotentialSpec& spec, Orientation o = Orientation::positive) {
    return detail::box_a(s, detail::Kinematics(s), spec, o);
}

/// Box phi (so that dt^2 phi = lap phi - rhs_phi), using s.dt_a0.
inline ComplexField rhs_phi(const FieldState& s, const PotentialSpec& spec) {
    return detail::box_phi(s, detail::Kinematics(s), s.dt_a0, spec);
}

/// dt^2 N = lap N - dV/dN.
inline ScalarField rhs_N(const FieldState& s, const PotentialSpec& spec) { return detail::accel_n(s, spec); }

/// Re-solves A0 (and, for the elliptic rate, dt_A0) from the dynamic fields of `s`.
inline void solve_constraints(FieldState& s, const PotentialSpec& spec, const StepOptions& opt) {
    auto [a0, report] = solve_A0(s.phi, s.dt_phi, s.a, spec.kappa(), opt.tol, s.a0);
    s.a0 = std::move(a0);
    s.solve_report = report;
    if (opt.a0_rate == A0Rate::elliptic) {
        const detail::Kinematics k(s);
        const ScalarField zero(s.grid());
        ComplexField r = laplacian(s.phi) - detail::box_phi(s, k, zero, spec);
        s.dt_a0 = detail::a0_rate_elliptic(s, r, spec);
    }
}

namespace detail {

struct Rates {
    ComplexField phi_tt;
    ScalarField n_tt;
    VectorField a_tt;
};

// Second time derivatives at a stage whose A0 / dt_A0 are already set.
inline Rates accelerations(const FieldState& s, const PotentialSpec& spec, const StepOptions& opt) {
    const Kinematics k(s);
    ComplexField phi_tt = laplacian(s.phi) - box_phi(s, k, s.dt_a0, spec);
    VectorField a_tt(laplacian(s.a[0]), laplacian(s.a[1]));
    a_tt -= box_a(s, k, spec, opt.orientation);
    return {std::move(phi_tt), accel_n(s, spec), std::move(a_tt)};
}

// stage = base + h * (velocities, accelerations)
inline FieldState advance(const FieldState& base, const FieldState& slope_state, const Rates& r, double h) {
    FieldState out = base;
    out.phi.axpy(Complex(h), slope_state.dt_phi);
    out.dt_phi.axpy(Complex(h), r.phi_tt);
    out.n.axpy(h, slope_state.dt_n);
    out.dt_n.axpy(h, r.n_tt);
    out.a.axpy(h, slope_state.dt_a);
    out.dt_a.axpy(h, r.a_tt);
    return out;
}

}  // namespace detail

/// One classical RK4 step of (phi, dt phi, N, dt N, A, dt A). A0 is re-solved
/// at every stage from the stage fields. Expects `s` to carry a solved A0
/// (and dt_A0 for the elliptic rate), as produced by make_initial_data or a
/// previous step. Throws EllipticSolveError or NumericalAbort.
inline FieldState step(const FieldState& s, double dt, const PotentialSpec& spec, const StepOptions& opt = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive and finite");
    const double h = 0.5 * dt;

    auto stage_constraints = [&](FieldState& st, const FieldState& prev_stage) {
        st.a0 = prev_stage.a0;  // warm start
        if (opt.a0_rate == A0Rate::lagged) st.dt_a0 = s.dt_a0;
        solve_constraints(st, spec, opt);
    };

    const detail::Rates k1 = detail::accelerations(s, spec, opt);
    FieldState s2 = detail::advance(s, s, k1, h);
    s2.t = s.t + h;
    stage_constraints(s2, s);
    const detail::Rates k2 = detail::accelerations(s2, spec, opt);
    FieldState s3 = detail::advance(s, s2, k2, h);
    s3.t = s.t + h;
    stage_constraints(s3, s2);
    const detail::Rates k3 = detail::accelerations(s3, spec, opt);
    FieldState s4 = detail::advance(s, s3, k3, dt);
    s4.t = s.t + dt;
    stage_constraints(s4, s3);
    const detail::Rates k4 = detail::accelerations(s4, spec, opt);

    FieldState out = s;
    const double w1 = dt / 6.0;
    const double w2 = dt / 3.0;
    out.phi.axpy(Complex(w1), s.dt_phi).axpy(Complex(w2), s2.dt_phi).axpy(Complex(w2), s3.dt_phi).axpy(Complex(w1), s4.dt_phi);
    out.dt_phi.axpy(Complex(w1), k1.phi_tt).axpy(Complex(w2), k2.phi_tt).axpy(Complex(w2), k3.phi_tt).axpy(Complex(w1), k4.phi_tt);
    out.n.axpy(w1, s.dt_n).axpy(w2, s2.dt_n).axpy(w2, s3.dt_n).axpy(w1, s4.dt_n);
    out.dt_n.axpy(w1, k1.n_tt).axpy(w2, k2.n_tt).axpy(w2, k3.n_tt).axpy(w1, k4.n_tt);
    out.a.axpy(w1, s.dt_a).axpy(w2, s2.dt_a).axpy(w2, s3.dt_a).axpy(w1, s4.dt_a);
    out.dt_a.axpy(w1, k1.a_tt).axpy(w2, k2.a_tt).axpy(w2, k3.a_tt).axpy(w1, k4.a_tt);
    out.t = s.t + dt;

    if (const std::string bad = out.first_non_finite(); !bad.empty()) {
        throw NumericalAbort("non-finite values in " + bad + " after step to t = " + std::to_string(out.t) +
                             " (dt = " + std::to_string(dt) + ")");
    }
    out.a0 = s4.a0;
    solve_constraints(out, spec, opt);
    if (opt.a0_rate == A0Rate::lagged) out.dt_a0 = estimate_dt_A0(s.a0, out.a0, dt);
    if (const std::string bad = out.first_non_finite(); !bad.empty()) {
        throw NumericalAbort("non-finite values in " + bad + " after constraint solve at t = " + std::to_string(out.t));
    }
    return out;
}

}  // namespace mcsh
