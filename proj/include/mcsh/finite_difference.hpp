#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mcsh/grid.hpp"

// Periodic centred finite differences. These are the independent
// reference discretisation for every spectral operator; nothing in here
// touches the FFT path.
namespace mcsh::fd {

/// Fornberg weights for the `derivative`-th derivative at 0 on the nodes
/// -r..r, r = order/2. Returns 2r+1 weights for unit spacing.
inline std::vector<double> centered_weights(int derivative, int order) {
    if (order < 2 || order % 2 != 0) throw std::invalid_argument("fd: order must be even and >= 2");
    if (derivative < 1 || derivative > 2) throw std::invalid_argument("fd: derivative must be 1 or 2");
    const int r = order / 2;
    const int n = 2 * r;  // highest node index
    std::vector<double> x(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = i - r;

    const int m = derivative;
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    double c1 = 1.0;
    double c4 = x[0];
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[ui];
        for (int j = 0; j < i; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double c3 = x[ui] - x[uj];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    const auto uk = static_cast<std::size_t>(k);
                    c[ui][uk] = c1 * (k * c[ui - 1][uk - 1] - c5 * c[ui - 1][uk]) / c2;
                }
                c[ui][0] = -c1 * c5 * c[ui - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                const auto uk = static_cast<std::size_t>(k);
                c[uj][uk] = (c4 * c[uj][uk] - k * c[uj][uk - 1]) / c3;
            }
            c[uj][0] = c4 * c[uj][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
    return w;
}

/// Applies a centred stencil along x (axis 0) or y (axis 1).
template <class T>
Field<T> apply_stencil(const Field<T>& f, int axis, const std::vector<double>& w, double scale) {
    const Grid& g = f.grid();
    const int nx = g.nx();
    const int ny = g.ny();
    const int r = static_cast<int>(w.size() / 2);
    if (2 * r + 1 > (axis == 0 ? nx : ny)) throw std::invalid_argument("fd: stencil wider than the grid");
    Field<T> out(g);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            T acc{};
            for (int s = -r; s <= r; ++s) {
                const double ws = w[static_cast<std::size_t>(s + r)];
                if (ws == 0.0) continue;
                const int ii = axis == 0 ? (i + s + nx) % nx : i;
                const int jj = axis == 1 ? (j + s + ny) % ny : j;
                acc += ws * f(ii, jj);
            }
            out(i, j) = acc * scale;
        }
    }
    return out;
}

template <class T>
Field<T> d_dx(const Field<T>& f, int order = 4) {
    return apply_stencil(f, 0, centered_weights(1, order), 1.0 / f.grid().dx());
}

template <class T>
Field<T> d_dy(const Field<T>& f, int order = 4) {
    return apply_stencil(f, 1, centered_weights(1, order), 1.0 / f.grid().dy());
}

template <class T>
Vec2<T> gradient(const Field<T>& f, int order = 4) {
    return Vec2<T>(d_dx(f, order), d_dy(f, order));
}

template <class T>
Field<T> divergence(const Vec2<T>& v, int order = 4) {
    return d_dx(v[0], order) + d_dy(v[1], order);
}

template <class T>
Field<T> curl(const Vec2<T>& v, int order = 4) {
    return d_dx(v[1], order) - d_dy(v[0], order);
}

/// Second-derivative stencils on each axis (not div of grad).
template <class T>
Field<T> laplacian(const Field<T>& f, int order = 4) {
    const auto w = centered_weights(2, order);
    const double hx = f.grid().dx();
    const double hy = f.grid().dy();
    return apply_stencil(f, 0, w, 1.0 / (hx * hx)) + apply_stencil(f, 1, w, 1.0 / (hy * hy));
}

}  // namespace mcsh::fd
