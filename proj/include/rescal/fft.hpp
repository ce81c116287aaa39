// SPDX-License-Identifier: Apache-2.0
#pragma once

// Radix-2 complex FFT, one and two dimensional.
//
// Normalization: the forward transform is unnormalized and the inverse
// carries 1/N, so ifft(fft(x)) == x and sum |x|^2 == (1/N) sum |X|^2.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rescal/error.hpp"

namespace rescal {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) noexcept { return std::has_single_bit(n); }

namespace detail {

/// exp(sign * 2*pi*i * k / n) for k < n/2.
inline std::vector<Complex> twiddles(std::size_t n, bool inverse) {
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<Complex> tw(n / 2);
    for (std::size_t k = 0; k < tw.size(); ++k) {
        tw[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    return tw;
}

inline void fft_inplace(std::span<Complex> a, std::span<const Complex> tw) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * tw[k * step];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

inline void fft_inplace(std::span<Complex> a, bool inverse) {
    if (!is_power_of_two(a.size())) {
        throw SizeError("fft length " + std::to_string(a.size()) + " is not a power of two");
    }
    const auto tw = twiddles(a.size(), inverse);
    fft_inplace(a, tw);
}

}  // namespace detail

/// 1-D transform of a power-of-two length sequence.
inline std::vector<Complex> fft(std::vector<Complex> a) {
    detail::fft_inplace(a, false);
    return a;
}

inline std::vector<Complex> ifft(std::vector<Complex> a) {
    detail::fft_inplace(a, true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= scale;
    return a;
}

/// Row-major complex grid of Fourier coefficients. Bin (kx, ky) is stored at
/// ky * width + kx; indices above n/2 are negative frequencies.
struct Spectrum {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Complex> bins;

    Complex& operator()(std::size_t kx, std::size_t ky) { return bins[ky * width + kx]; }
    const Complex& operator()(std::size_t kx, std::size_t ky) const { return bins[ky * width + kx]; }
};

/// In-place 2-D transform of a row-major complex grid.
inline void fft2_inplace(Spectrum& s, bool inverse) {
    if (!is_power_of_two(s.width) || !is_power_of_two(s.height)) {
        throw SizeError("fft2 needs power-of-two dimensions, got " + std::to_string(s.width) + "x" +
                        std::to_string(s.height));
    }
    const auto tw_row = detail::twiddles(s.width, inverse);
    for (std::size_t y = 0; y < s.height; ++y) {
        detail::fft_inplace(std::span<Complex>(s.bins).subspan(y * s.width, s.width), tw_row);
    }
    const auto tw_col = detail::twiddles(s.height, inverse);
    std::vector<Complex> column(s.height);
    for (std::size_t x = 0; x < s.width; ++x) {
        for (std::size_t y = 0; y < s.height; ++y) column[y] = s.bins[y * s.width + x];
        detail::fft_inplace(column, tw_col);
        for (std::size_t y = 0; y < s.height; ++y) s.bins[y * s.width + x] = column[y];
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(s.width * s.height);
        for (auto& v : s.bins) v *= scale;
    }
}

/// Signed frequency of DFT index i on an n-point axis (Nyquist maps to +n/2).
inline long signed_frequency(std::size_t i, std::size_t n) noexcept {
    return i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

/// Euclidean index norm |k| of bin (kx, ky).
inline double frequency_norm(std::size_t kx, std::size_t ky, std::size_t width, std::size_t height) noexcept {
    const double fx = static_cast<double>(signed_frequency(kx, width));
    const double fy = static_cast<double>(signed_frequency(ky, height));
    return std::sqrt(fx * fx + fy * fy);
}

}  // namespace rescal
