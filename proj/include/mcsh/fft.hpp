#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>

#include <fftw3.h>

namespace mcsh {

using Complex = std::complex<double>;

namespace detail {
// FFTW's planner is not re-entrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Out-of-place 2D complex DFT pair on a row-major ny x nx array.
///
/// Plans are built once with FFTW_ESTIMATE | FFTW_UNALIGNED and executed
/// through the new-array interface, so a single instance may be shared by
/// any number of threads as long as each call passes its own buffers.
/// The inverse is normalised by 1/(nx*ny).
class Fft2d {
public:
    Fft2d(int nx, int ny) : nx_(nx), ny_(ny) {
        const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_complex* a = fftw_alloc_complex(n);
        fftw_complex* b = fftw_alloc_complex(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_2d(ny, nx, a, b, FFTW_FORWARD, flags);
        inverse_ = fftw_plan_dft_2d(ny, nx, a, b, FFTW_BACKWARD, flags);
        fftw_free(a);
        fftw_free(b);
        if (forward_ == nullptr || inverse_ == nullptr) {
            throw std::runtime_error("FFTW failed to create a 2D plan");
        }
    }

    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    ~Fft2d() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    void forward(std::span<const Complex> in, std::span<Complex> out) const {
        check(in, out);
        fftw_execute_dft(forward_, as_fftw(in), as_fftw(out));
    }

    void inverse(std::span<const Complex> in, std::span<Complex> out) const {
        check(in, out);
        fftw_execute_dft(inverse_, as_fftw(in), as_fftw(out));
        const double scale = 1.0 / static_cast<double>(size());
        for (auto& v : out) v *= scale;
    }

private:
    void check(std::span<const Complex> in, std::span<Complex> out) const {
        if (in.size() != size() || out.size() != size()) {
            throw std::invalid_argument("Fft2d: buffer size does not match plan");
        }
        if (static_cast<const void*>(in.data()) == static_cast<const void*>(out.data())) {
            throw std::invalid_argument("Fft2d: plans are out-of-place");
        }
    }

    // Out-of-place c2c transforms leave the input untouched.
    static fftw_complex* as_fftw(std::span<const Complex> s) {
        return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(s.data()));
    }
    static fftw_complex* as_fftw(std::span<Complex> s) {
        return reinterpret_cast<fftw_complex*>(s.data());
    }

    int nx_;
    int ny_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace mcsh
