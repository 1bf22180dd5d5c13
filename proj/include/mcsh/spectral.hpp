#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsh/grid.hpp"

namespace mcsh {

/// Unnormalised DFT coefficients of a field, same row-major layout as the
/// samples. Parseval: sum |f|^2 = (1/N) sum |f_hat|^2.
class Spectrum {
public:
    explicit Spectrum(Grid grid) : grid_(std::move(grid)), c_(grid_.size()) {}
    Spectrum(Grid grid, std::vector<Complex> coeffs) : grid_(std::move(grid)), c_(std::move(coeffs)) {}

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return c_.size(); }
    Complex& operator[](std::size_t k) { return c_[k]; }
    const Complex& operator[](std::size_t k) const { return c_[k]; }
    std::span<Complex> coeffs() { return c_; }
    std::span<const Complex> coeffs() const { return c_; }

    /// Multiplies mode (i, j) by fn(kx_i, ky_j, slot index).
    template <class Fn>
    Spectrum& apply(Fn&& fn) {
        const auto kx = grid_.kx();
        const auto ky = grid_.ky();
        const int nx = grid_.nx();
        const int ny = grid_.ny();
#pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                c_[k] *= fn(kx[static_cast<std::size_t>(i)], ky[static_cast<std::size_t>(j)], k);
            }
        }
        return *this;
    }

    /// Copy with mode (i, j) multiplied by fn(kx, ky, slot).
    template <class Fn>
    Spectrum mapped(Fn&& fn) const {
        Spectrum s(*this);
        s.apply(std::forward<Fn>(fn));
        return s;
    }

    Spectrum& operator+=(const Spectrum& o) { for (std::size_t k = 0; k < size(); ++k) c_[k] += o.c_[k]; return *this; }

private:
    Grid grid_;
    std::vector<Complex> c_;
};

template <class T>
Spectrum to_spectral(const Field<T>& f) {
    const Grid& g = f.grid();
    Spectrum s(g);
    if constexpr (is_complex_v<T>) {
        g.fft().forward(f.values(), s.coeffs());
    } else {
        std::vector<Complex> tmp(f.values().begin(), f.values().end());
        g.fft().forward(tmp, s.coeffs());
    }
    return s;
}

/// Inverse transform; real fields keep the real part.
template <class T>
Field<T> to_physical(const Spectrum& s) {
    const Grid& g = s.grid();
    std::vector<Complex> tmp(g.size());
    g.fft().inverse(s.coeffs(), tmp);
    if constexpr (is_complex_v<T>) {
        return Field<T>(g, std::move(tmp));
    } else {
        std::vector<double> re(tmp.size());
        for (std::size_t k = 0; k < tmp.size(); ++k) re[k] = tmp[k].real();
        return Field<T>(g, std::move(re));
    }
}

namespace spectral {

inline Spectrum d_dx(const Spectrum& s) { return s.mapped([](double kx, double, std::size_t) { return Complex(0.0, kx); }); }
inline Spectrum d_dy(const Spectrum& s) { return s.mapped([](double, double ky, std::size_t) { return Complex(0.0, ky); }); }
inline Spectrum laplacian(const Spectrum& s) {
    return s.mapped([](double kx, double ky, std::size_t) { return Complex(-(kx * kx + ky * ky), 0.0); });
}
inline Spectrum dealias(const Spectrum& s) {
    const auto mask = s.grid().dealias_mask();
    return s.mapped([mask](double, double, std::size_t k) { return Complex(mask[k], 0.0); });
}

/// sum_k w(k) |f_hat_k|^2 * cell_area / N, the quadrature-consistent spectral energy.
template <class Weight>
double weighted_energy(const Spectrum& s, Weight&& w) {
    const Grid& g = s.grid();
    const auto kx = g.kx();
    const auto ky = g.ky();
    double acc = 0.0;
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * g.nx() + i;
            acc += w(kx[static_cast<std::size_t>(i)], ky[static_cast<std::size_t>(j)]) * std::norm(s[k]);
        }
    }
    return acc * g.cell_area() / static_cast<double>(g.size());
}

}  // namespace spectral

template <class T>
Vec2<T> gradient(const Field<T>& f) {
    const Spectrum s = to_spectral(f);
    return Vec2<T>(to_physical<T>(spectral::d_dx(s)), to_physical<T>(spectral::d_dy(s)));
}

template <class T>
Field<T> laplacian(const Field<T>& f) {
    return to_physical<T>(spectral::laplacian(to_spectral(f)));
}

template <class T>
Field<T> divergence(const Vec2<T>& v) {
    Spectrum s = spectral::d_dx(to_spectral(v[0]));
    s += spectral::d_dy(to_spectral(v[1]));
    return to_physical<T>(s);
}

/// Scalar curl d1 v2 - d2 v1.
template <class T>
Field<T> curl(const Vec2<T>& v) {
    Spectrum s = spectral::d_dx(to_spectral(v[1]));
    Spectrum t = spectral::d_dy(to_spectral(v[0]));
    for (std::size_t k = 0; k < s.size(); ++k) s[k] -= t[k];
    return to_physical<T>(s);
}

/// Rotated gradient (-d2 psi, d1 psi); always divergence-free.
template <class T>
Vec2<T> skew_gradient(const Field<T>& psi) {
    const Spectrum s = to_spectral(psi);
    Field<T> vx = to_physical<T>(spectral::d_dy(s));
    vx *= T(-1);
    return Vec2<T>(std::move(vx), to_physical<T>(spectral::d_dx(s)));
}

/// Zeroes every mode outside the two-thirds band.
template <class T>
Field<T> dealias(const Field<T>& f) {
    return to_physical<T>(spectral::dealias(to_spectral(f)));
}

/// Zeroes modes with |k| > k_cut; for s_order > 0 also multiplies the
/// retained modes by exp(-(|k|/k_cut)^(2 s_order)).
template <class T>
Field<T> band_limit(const Field<T>& f, double k_cut, int s_order = 0) {
    if (!(k_cut > 0.0)) throw std::invalid_argument("band_limit: cutoff must be positive");
    Spectrum s = to_spectral(f);
    s.apply([&](double kx, double ky, std::size_t) {
        const double k = std::hypot(kx, ky);
        if (k > k_cut) return Complex(0.0, 0.0);
        return Complex(s_order > 0 ? std::exp(-std::pow(k / k_cut, 2.0 * s_order)) : 1.0, 0.0);
    });
    return to_physical<T>(s);
}

/// Sobolev norm (sum_k (1+|k|^2)^s |f_hat_k|^2 * cell weight)^(1/2).
template <class T>
double hs_norm(const Field<T>& f, double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("hs_norm: exponent must be >= 0, got " + std::to_string(s));
    return std::sqrt(spectral::weighted_energy(to_spectral(f), [s](double kx, double ky) {
        return std::pow(1.0 + kx * kx + ky * ky, s);
    }));
}

/// ||nabla^p f|| realised as the multiplier |k|^p.
template <class T>
double derivative_norm(const Field<T>& f, int p) {
    if (p < 0) throw std::invalid_argument("derivative_norm: order must be >= 0");
    return std::sqrt(spectral::weighted_energy(to_spectral(f), [p](double kx, double ky) {
        return std::pow(kx * kx + ky * ky, p);
    }));
}

template <class T>
double derivative_norm(const Vec2<T>& v, int p) {
    const double a = derivative_norm(v[0], p);
    const double b = derivative_norm(v[1], p);
    return std::sqrt(a * a + b * b);
}

/// L^2 norm computed from the spectrum (Parseval route).
template <class T>
double spectral_l2_norm(const Field<T>& f) {
    return std::sqrt(spectral::weighted_energy(to_spectral(f), [](double, double) { return 1.0; }));
}

}  // namespace mcsh
