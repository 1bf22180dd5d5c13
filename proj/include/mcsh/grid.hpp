#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mcsh/fft.hpp"

namespace mcsh {

/// Periodic rectangular lattice [0, lx) x [0, ly) with nx x ny nodes.
///
/// Grid is a cheap handle: copies share the immutable wavenumber tables,
/// the two-thirds dealiasing mask and the FFT plans. Samples are stored
/// row-major with x fastest, index = j * nx + i.
///
/// Wavenumber tables hold k_m = 2 pi m / l for m = 0 .. n/2-1, -n/2+1 .. -1
/// and 0 at the Nyquist slot, so every table is exactly antisymmetric
/// (k[m] == -k[n-m]) and every derivative operator shares one multiplier.
class Grid {
public:
    Grid(int nx, int ny, double lx, double ly) {
        if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0) {
            throw std::invalid_argument("Grid: nx and ny must be even and >= 8 (got " +
                                        std::to_string(nx) + " x " + std::to_string(ny) + ")");
        }
        if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
            throw std::invalid_argument("Grid: lengths must be finite and positive");
        }
        auto impl = std::make_shared<Impl>();
        impl->nx = nx;
        impl->ny = ny;
        impl->lx = lx;
        impl->ly = ly;
        impl->dx = lx / nx;
        impl->dy = ly / ny;
        impl->kx = wavenumbers(nx, lx);
        impl->ky = wavenumbers(ny, ly);
        impl->mask.resize(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const bool keep = 3 * std::abs(mode_index(i, nx)) < nx &&
                                  3 * std::abs(mode_index(j, ny)) < ny;
                impl->mask[static_cast<std::size_t>(j) * nx + i] = keep ? 1 : 0;
            }
        }
        impl->fft = std::make_unique<Fft2d>(nx, ny);
        impl_ = std::move(impl);
    }

    int nx() const { return impl_->nx; }
    int ny() const { return impl_->ny; }
    double lx() const { return impl_->lx; }
    double ly() const { return impl_->ly; }
    double dx() const { return impl_->dx; }
    double dy() const { return impl_->dy; }
    double cell_area() const { return impl_->dx * impl_->dy; }
    double area() const { return impl_->lx * impl_->ly; }
    std::size_t size() const { return static_cast<std::size_t>(impl_->nx) * impl_->ny; }

    double x(int i) const { return i * impl_->dx; }
    double y(int j) const { return j * impl_->dy; }

    std::span<const double> kx() const { return impl_->kx; }
    std::span<const double> ky() const { return impl_->ky; }

    /// Largest |k| along either axis (excludes the Nyquist slot).
    double k_max() const { return std::min(impl_->kx[impl_->nx / 2 - 1], impl_->ky[impl_->ny / 2 - 1]); }

    /// 1 for modes kept by the two-thirds rule (|m| < n/3 on both axes).
    std::span<const std::uint8_t> dealias_mask() const { return impl_->mask; }

    const Fft2d& fft() const { return *impl_->fft; }

    /// Signed integer mode number of FFT slot `slot` on an axis of n points.
    static int mode_index(int slot, int n) { return slot <= n / 2 ? (slot == n / 2 ? -n / 2 : slot) : slot - n; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.impl_ == b.impl_ || (a.nx() == b.nx() && a.ny() == b.ny() && a.lx() == b.lx() && a.ly() == b.ly());
    }

private:
    struct Impl {
        int nx = 0, ny = 0;
        double lx = 0, ly = 0, dx = 0, dy = 0;
        std::vector<double> kx, ky;
        std::vector<std::uint8_t> mask;
        std::unique_ptr<Fft2d> fft;
    };

    static std::vector<double> wavenumbers(int n, double l) {
        std::vector<double> k(static_cast<std::size_t>(n));
        const double dk = 2.0 * std::numbers::pi / l;
        for (int m = 0; m < n; ++m) {
            k[static_cast<std::size_t>(m)] = m == n / 2 ? 0.0 : dk * mode_index(m, n);
        }
        return k;
    }

    std::shared_ptr<const Impl> impl_;
};

template <class T>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

/// Samples of a real or complex field on a Grid.
template <class T>
class Field {
public:
    using value_type = T;

    explicit Field(Grid grid, T fill = T{}) : grid_(std::move(grid)), data_(grid_.size(), fill) {}

    Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), data_(std::move(values)) {
        if (data_.size() != grid_.size()) throw std::invalid_argument("Field: value count does not match grid");
    }

    /// Samples fn(x, y) at every node.
    template <class Fn>
    static Field sample(const Grid& grid, Fn&& fn) {
        Field f(grid);
        for (int j = 0; j < grid.ny(); ++j) {
            for (int i = 0; i < grid.nx(); ++i) f(i, j) = static_cast<T>(fn(grid.x(i), grid.y(j)));
        }
        return f;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * grid_.nx() + i]; }
    const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * grid_.nx() + i]; }
    T& operator[](std::size_t k) { return data_[k]; }
    const T& operator[](std::size_t k) const { return data_[k]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& v) {
            if constexpr (is_complex_v<T>) return std::isfinite(v.real()) && std::isfinite(v.imag());
            else return std::isfinite(v);
        });
    }

    Field& operator+=(const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] += o.data_[k]; return *this; }
    Field& operator-=(const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] -= o.data_[k]; return *this; }
    Field& operator*=(const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] *= o.data_[k]; return *this; }
    Field& operator*=(T a) { for (auto& v : data_) v *= a; return *this; }

    /// this += a * o
    Field& axpy(T a, const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] += a * o.data_[k]; return *this; }

    friend bool operator==(const Field& a, const Field& b) { return a.grid_ == b.grid_ && a.data_ == b.data_; }

private:
    void check(const Field& o) const {
        if (!(o.grid_ == grid_)) throw std::invalid_argument("Field: operands live on different grids");
    }

    Grid grid_;
    std::vector<T> data_;
};

using ScalarField = Field<double>;
using ComplexField = Field<Complex>;

template <class T> Field<T> operator+(Field<T> a, const Field<T>& b) { return a += b; }
template <class T> Field<T> operator-(Field<T> a, const Field<T>& b) { return a -= b; }
template <class T> Field<T> operator*(Field<T> a, const Field<T>& b) { return a *= b; }
template <class T> Field<T> operator*(T s, Field<T> a) { return a *= s; }
template <class T> Field<T> operator-(Field<T> a) { return a *= T(-1); }

/// Two spatial components, index 0 <-> i = 1 (x), index 1 <-> i = 2 (y).
template <class T>
struct Vec2 {
    std::array<Field<T>, 2> c;

    Vec2(Field<T> x, Field<T> y) : c{std::move(x), std::move(y)} {
        if (!(c[0].grid() == c[1].grid())) throw std::invalid_argument("Vec2: components on different grids");
    }
    explicit Vec2(const Grid& g) : c{Field<T>(g), Field<T>(g)} {}

    Field<T>& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    const Field<T>& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
    const Grid& grid() const { return c[0].grid(); }
    bool all_finite() const { return c[0].all_finite() && c[1].all_finite(); }

    Vec2& operator+=(const Vec2& o) { c[0] += o.c[0]; c[1] += o.c[1]; return *this; }
    Vec2& operator-=(const Vec2& o) { c[0] -= o.c[0]; c[1] -= o.c[1]; return *this; }
    Vec2& operator*=(T a) { c[0] *= a; c[1] *= a; return *this; }
    Vec2& axpy(T a, const Vec2& o) { c[0].axpy(a, o.c[0]); c[1].axpy(a, o.c[1]); return *this; }

    friend bool operator==(const Vec2& a, const Vec2& b) { return a.c[0] == b.c[0] && a.c[1] == b.c[1]; }
};

using VectorField = Vec2<double>;
using ComplexVectorField = Vec2<Complex>;

template <class T> Vec2<T> operator+(Vec2<T> a, const Vec2<T>& b) { return a += b; }
template <class T> Vec2<T> operator-(Vec2<T> a, const Vec2<T>& b) { return a -= b; }
template <class T> Vec2<T> operator*(T s, Vec2<T> a) { return a *= s; }

/// out[k] = fn(a[k], rest[k]...), all operands on one grid.
template <class Fn, class A, class... Rest>
auto pointwise(Fn&& fn, const Field<A>& a, const Field<Rest>&... rest) {
    using R = std::invoke_result_t<Fn&, const A&, const Rest&...>;
    if (!((rest.grid() == a.grid()) && ...)) throw std::invalid_argument("pointwise: operands on different grids");
    Field<R> out(a.grid());
    const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto u = static_cast<std::size_t>(k);
        out[u] = fn(a[u], rest[u]...);
    }
    return out;
}

inline ScalarField real_part(const ComplexField& f) { return pointwise([](Complex z) { return z.real(); }, f); }
inline ScalarField imag_part(const ComplexField& f) { return pointwise([](Complex z) { return z.imag(); }, f); }
inline ScalarField abs2(const ComplexField& f) { return pointwise([](Complex z) { return std::norm(z); }, f); }
inline ComplexField to_complex(const ScalarField& f) { return pointwise([](double v) { return Complex(v, 0.0); }, f); }

template <class T>
double magnitude(const T& v) {
    if constexpr (is_complex_v<T>) return std::abs(v);
    else return std::abs(v);
}

/// Quadrature mean over the torus.
template <class T>
T mean(const Field<T>& f) {
    T s{};
    for (const auto& v : f.values()) s += v;
    return s / static_cast<double>(f.size());
}

template <class T>
double max_abs(const Field<T>& f) {
    double m = 0.0;
    for (const auto& v : f.values()) m = std::max(m, magnitude(v));
    return m;
}

/// (sum |f|^2 dx dy)^(1/2)
template <class T>
double l2_norm(const Field<T>& f) {
    double s = 0.0;
    for (const auto& v : f.values()) s += magnitude(v) * magnitude(v);
    return std::sqrt(s * f.grid().cell_area());
}

template <class T>
double l2_norm(const Vec2<T>& v) {
    const double a = l2_norm(v[0]);
    const double b = l2_norm(v[1]);
    return std::sqrt(a * a + b * b);
}

/// Discrete L^p norm for p in {2, 3, 4, 6}; p = infinity gives the max norm.
template <class T>
double lp_norm(const Field<T>& f, double p) {
    if (std::isinf(p) && p > 0) return max_abs(f);
    if (p != 2.0 && p != 3.0 && p != 4.0 && p != 6.0) {
        throw std::invalid_argument("lp_norm: unsupported exponent p = " + std::to_string(p));
    }
    double s = 0.0;
    for (const auto& v : f.values()) s += std::pow(magnitude(v), p);
    return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

}  // namespace mcsh
