#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsh/grid.hpp"

namespace mcsh {

/// V(|phi|, N) = sum_{m=1..M} sum_{q=1..Q} alpha_mq |phi|^(2m) N^q, plus the
/// Chern-Simons constant kappa.
class PotentialSpec {
public:
    PotentialSpec(int degree_m, int degree_q, std::vector<double> alpha, double kappa)
        : m_(degree_m), q_(degree_q), alpha_(std::move(alpha)), kappa_(kappa) {
        if (m_ < 1 || q_ < 1) throw std::invalid_argument("PotentialSpec: degrees M and Q must be >= 1");
        if (alpha_.size() != static_cast<std::size_t>(m_) * static_cast<std::size_t>(q_)) {
            throw std::invalid_argument("PotentialSpec: alpha table must have M*Q entries");
        }
        for (double a : alpha_) {
            if (!std::isfinite(a)) throw std::invalid_argument("PotentialSpec: alpha entries must be finite");
        }
        if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
            throw std::invalid_argument("PotentialSpec: kappa must be > 0 (Chern-Simons constant)");
        }
    }

    /// Zero potential with the given kappa.
    static PotentialSpec none(double kappa) { return PotentialSpec(1, 1, {0.0}, kappa); }

    /// Single coefficient alpha_mq = value, all others zero.
    static PotentialSpec single(int m, int q, double value, double kappa) {
        std::vector<double> a(static_cast<std::size_t>(m) * static_cast<std::size_t>(q), 0.0);
        PotentialSpec s(m, q, std::move(a), kappa);
        s.alpha(m, q) = value;
        return s;
    }

    int degree_m() const { return m_; }
    int degree_q() const { return q_; }
    double kappa() const { return kappa_; }

    /// 1-based (m, q) access.
    double alpha(int m, int q) const { return alpha_.at(index(m, q)); }
    double& alpha(int m, int q) { return alpha_.at(index(m, q)); }

    bool is_zero() const {
        for (double a : alpha_) if (a != 0.0) return false;
        return true;
    }

    /// True when V is unbounded below along some direction of (|phi|, N):
    /// the leading N power has an odd exponent or a negative coefficient.
    bool unbounded_below() const {
        for (int m = 1; m <= m_; ++m) {
            for (int q = q_; q >= 1; --q) {
                const double a = alpha(m, q);
                if (a == 0.0) continue;
                if (q % 2 == 1 || a < 0.0) return true;
                break;
            }
        }
        return false;
    }

private:
    std::size_t index(int m, int q) const {
        if (m < 1 || m > m_ || q < 1 || q > q_) throw std::out_of_range("PotentialSpec: (m, q) outside the table");
        return static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(q_) + static_cast<std::size_t>(q - 1);
    }

    int m_;
    int q_;
    std::vector<double> alpha_;
    double kappa_;
};

namespace detail {

// Pointwise kernels. rho = |phi|^2; powers are built by running products.
struct PotentialTerms {
    double v = 0.0;         // V
    double dv_drho = 0.0;   // dV / d(rho)
    double dv_dn = 0.0;     // dV / dN
};

inline PotentialTerms potential_terms(const PotentialSpec& spec, double rho, double n) {
    PotentialTerms t;
    double rho_m1 = 1.0;  // rho^(m-1)
    for (int m = 1; m <= spec.degree_m(); ++m) {
        double n_q1 = 1.0;  // n^(q-1)
        for (int q = 1; q <= spec.degree_q(); ++q) {
            const double a = spec.alpha(m, q);
            if (a != 0.0) {
                t.v += a * rho_m1 * rho * n_q1 * n;
                t.dv_drho += a * m * rho_m1 * n_q1 * n;
                t.dv_dn += a * q * rho_m1 * rho * n_q1;
            }
            n_q1 *= n;
        }
        rho_m1 *= rho;
    }
    return t;
}

}  // namespace detail

inline ScalarField eval_V(const ComplexField& phi, const ScalarField& n, const PotentialSpec& spec) {
    return pointwise([&spec](Complex p, double nv) { return detail::potential_terms(spec, std::norm(p), nv).v; }, phi, n);
}

/// Derivative with respect to conj(phi): sum alpha_mq m |phi|^(2(m-1)) phi N^q.
/// The gradient in (Re phi, Im phi) is twice this.
inline ComplexField dV_dphi(const ComplexField& phi, const ScalarField& n, const PotentialSpec& spec) {
    return pointwise([&spec](Complex p, double nv) { return detail::potential_terms(spec, std::norm(p), nv).dv_drho * p; },
                     phi, n);
}

/// sum alpha_mq q |phi|^(2m) N^(q-1).
inline ScalarField dV_dN(const ComplexField& phi, const ScalarField& n, const PotentialSpec& spec) {
    return pointwise([&spec](Complex p, double nv) { return detail::potential_terms(spec, std::norm(p), nv).dv_dn; }, phi, n);
}

}  // namespace mcsh
