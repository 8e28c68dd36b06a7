#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "core.hpp"

namespace equipact {

inline constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT with precomputed twiddles.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
        if (!is_power_of_two(n)) throw InvalidArgument("FFT length must be a power of two");
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(ang), std::sin(ang)};
        }
    }

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<std::complex<double>> x) const {
        if (x.size() != n_) throw InvalidArgument("FFT buffer length mismatch");
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n_ / len;
            for (std::size_t base = 0; base < n_; base += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    const auto t = twiddle_[k * step] * x[base + k + half];
                    x[base + k + half] = x[base + k] - t;
                    x[base + k] += t;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> twiddle_;
};

}  // namespace equipact
