#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "mcsh/grid.hpp"
#include "mcsh/spectral.hpp"

namespace mcsh {

struct EllipticTolerances {
    double rel = 1e-10;
    double abs = 1e-12;
    int max_iterations = 500;
};

struct EllipticSolveReport {
    int iterations = 0;
    double final_residual = 0.0;  // ||lap u - c u - source||_L2
    bool converged = false;
};

/// Thrown when CG does not reach the tolerance; the run must abort.
class EllipticSolveError : public std::runtime_error {
public:
    explicit EllipticSolveError(EllipticSolveReport report)
        : std::runtime_error(message(report)), report_(report) {}
    const EllipticSolveReport& report() const { return report_; }

private:
    static std::string message(const EllipticSolveReport& r) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "elliptic solve did not converge after %d iterations (residual %.3e)", r.iterations,
                      r.final_residual);
        return buf;
    }
    EllipticSolveReport report_;
};

/// u with lap u = source - mean(source) and mean(u) = 0.
inline ScalarField solve_poisson(const ScalarField& source) {
    Spectrum s = to_spectral(source);
    s.apply([](double kx, double ky, std::size_t) {
        const double k2 = kx * kx + ky * ky;
        return Complex(k2 > 0.0 ? -1.0 / k2 : 0.0, 0.0);
    });
    return to_physical<double>(s);
}

/// Divergence-free projection with the sign convention P B = -B on
/// divergence-free B: (P B)_i = -(delta_ij - k_i k_j / |k|^2) B_j, and the
/// k = 0 mode maps to -mean(B). Equals lap^{-1} curl curl B.
inline VectorField leray_project(const VectorField& b) {
    const Grid& g = b.grid();
    const Spectrum bx = to_spectral(b[0]);
    const Spectrum by = to_spectral(b[1]);
    Spectrum px(g);
    Spectrum py(g);
    const auto kx = g.kx();
    const auto ky = g.ky();
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * g.nx() + i;
            const double a = kx[static_cast<std::size_t>(i)];
            const double c = ky[static_cast<std::size_t>(j)];
            const double k2 = a * a + c * c;
            if (k2 == 0.0) {
                px[k] = -bx[k];
                py[k] = -by[k];
                continue;
            }
            const Complex kb = (a * bx[k] + c * by[k]) / k2;
            px[k] = -(bx[k] - a * kb);
            py[k] = -(by[k] - c * kb);
        }
    }
    return VectorField(to_physical<double>(px), to_physical<double>(py));
}

/// Backward difference (curr - prev)/dt; zero when there is no previous solve.
inline ScalarField estimate_dt_A0(const std::optional<ScalarField>& prev, const ScalarField& curr, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("estimate_dt_A0: dt must be positive");
    if (!prev) return ScalarField(curr.grid());
    ScalarField out = curr - *prev;
    out *= 1.0 / dt;
    return out;
}

namespace detail {

inline double dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s * a.grid().cell_area();
}

}  // namespace detail

/// Solves lap u - c u = source for c >= 0 by preconditioned CG on the SPD
/// operator (c - lap). Preconditioner: spectral inverse of (mean(c) - lap).
/// A c that vanishes identically falls back to solve_poisson.
inline std::pair<ScalarField, EllipticSolveReport> solve_screened(const ScalarField& screening, const ScalarField& source,
                                                                   const EllipticTolerances& tol = {},
                                                                   const std::optional<ScalarField>& guess = std::nullopt) {
    if (!(tol.rel >= 0.0) || !(tol.abs >= 0.0) || tol.rel + tol.abs <= 0.0 || tol.max_iterations < 1) {
        throw std::invalid_argument("solve_screened: tolerances must be positive");
    }
    const Grid& g = source.grid();
    const double target = tol.abs + tol.rel * l2_norm(source);

    auto residual_of = [&](const ScalarField& u) {
        // source - (lap u - c u)
        ScalarField r = laplacian(u);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] = source[k] - (r[k] - screening[k] * u[k]);
        return r;
    };

    EllipticSolveReport report;
    if (max_abs(screening) == 0.0) {
        ScalarField centred = source;
        const double m = mean(source);
        for (auto& v : centred.values()) v -= m;
        ScalarField u = solve_poisson(centred);
        report.final_residual = l2_norm(residual_of(u));
        report.converged = report.final_residual <= target + std::abs(m) * std::sqrt(g.area());
        return {std::move(u), report};
    }

    const double shift = mean(screening);
    auto precondition = [shift](const ScalarField& r) {
        Spectrum s = to_spectral(r);
        s.apply([shift](double kx, double ky, std::size_t) { return Complex(1.0 / (shift + kx * kx + ky * ky), 0.0); });
        return to_physical<double>(s);
    };
    // CG on (c - lap) u = -source
    auto apply_op = [&](const ScalarField& p) {
        ScalarField q = laplacian(p);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] = screening[k] * p[k] - q[k];
        return q;
    };

    ScalarField u = guess ? *guess : ScalarField(g);
    ScalarField r = residual_of(u);  // = -source - (c - lap) u, up to sign
    for (auto& v : r.values()) v = -v;
    double rnorm = l2_norm(r);
    if (rnorm <= target) {
        report.final_residual = rnorm;
        report.converged = true;
        return {std::move(u), report};
    }
    ScalarField z = precondition(r);
    ScalarField p = z;
    double rz = detail::dot(r, z);
    for (int it = 1; it <= tol.max_iterations; ++it) {
        const ScalarField q = apply_op(p);
        const double alpha = rz / detail::dot(p, q);
        u.axpy(alpha, p);
        r.axpy(-alpha, q);
        report.iterations = it;
        rnorm = l2_norm(r);
        if (!std::isfinite(rnorm)) break;
        if (rnorm <= target) {
            // recompute from scratch so the report is not a recurrence artefact
            rnorm = l2_norm(residual_of(u));
            if (rnorm <= target) {
                report.converged = true;
                break;
            }
        }
        z = precondition(r);
        const double rz_next = detail::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = z[k] + beta * p[k];
    }
    report.final_residual = l2_norm(residual_of(u));
    report.converged = report.converged && report.final_residual <= target;
    return {std::move(u), report};
}

/// Source of the A0 constraint: kappa (d1 A2 - d2 A1) - Im(phi conj(dt phi)).
inline ScalarField a0_source(const ComplexField& phi, const ComplexField& dt_phi, const VectorField& a, double kappa) {
    ScalarField b = curl(a);
    return pointwise([kappa](double bv, Complex p, Complex pt) { return kappa * bv - std::imag(p * std::conj(pt)); }, b, phi,
                     dt_phi);
}

/// Solves lap A0 - |phi|^2 A0 = kappa F^0 - Im(phi conj(dt phi)) with F^0 = d1 A2 - d2 A1.
/// Throws EllipticSolveError when CG stalls.
inline std::pair<ScalarField, EllipticSolveReport> solve_A0(const ComplexField& phi, const ComplexField& dt_phi,
                                                             const VectorField& a, double kappa,
                                                             const EllipticTolerances& tol = {},
                                                             const std::optional<ScalarField>& guess = std::nullopt) {
    if (!(phi.grid() == dt_phi.grid()) || !(phi.grid() == a.grid())) {
        throw std::invalid_argument("solve_A0: fields live on different grids");
    }
    auto result = solve_screened(abs2(phi), a0_source(phi, dt_phi, a, kappa), tol, guess);
    if (!result.second.converged) throw EllipticSolveError(result.second);
    return result;
}

}  // namespace mcsh
