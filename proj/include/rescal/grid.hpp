// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fields (2-D real grids), Gaussian-random-field synthesis, resizing and
// spectral helpers.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rescal/error.hpp"
#include "rescal/fft.hpp"
#include "rescal/rng.hpp"

namespace rescal {

/// Row-major real grid. Values are finite; the constructor rejects NaN/Inf.
class Field {
public:
    Field() = default;

    Field(std::size_t width, std::size_t height) : width_(width), height_(height), data_(width * height, 0.0) {
        check_dims();
    }

    Field(std::size_t width, std::size_t height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims();
        if (data_.size() != width_ * height_) {
            throw SizeError("field data length " + std::to_string(data_.size()) + " != " + std::to_string(width_) +
                            "x" + std::to_string(height_));
        }
        for (double v : data_) {
            if (!std::isfinite(v)) throw NumericalError("non-finite value in field");
        }
    }

    static Field constant(std::size_t width, std::size_t height, double value) {
        return Field(width, height, std::vector<double>(width * height, value));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> values() const noexcept { return data_; }
    double operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Field& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Field&, const Field&) = default;

private:
    void check_dims() const {
        if (width_ == 0 || height_ == 0) throw SizeError("field dimensions must be positive");
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

/// Stationary Gaussian-random-field distribution: DC level, total per-pixel
/// variance and power-law exponent, P(k) proportional to |k|^-alpha.
struct DataSpec {
    double mean = 0.0;
    double variance = 1.0;
    double alpha = 2.0;

    void validate() const {
        if (!(variance > 0.0) || !std::isfinite(variance)) throw DomainError("DataSpec.variance must be > 0");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("DataSpec.alpha must be >= 0");
        if (!std::isfinite(mean)) throw DomainError("DataSpec.mean must be finite");
    }

    friend bool operator==(const DataSpec&, const DataSpec&) = default;
};

struct FieldStats {
    double mean = 0.0;
    double variance = 0.0;
};

/// Population mean and variance (divide by N).
inline FieldStats field_stats(const Field& x) {
    const auto v = x.values();
    double sum = 0.0;
    for (double e : v) sum += e;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return {mean, ss / static_cast<double>(v.size())};
}

inline void require_power_of_two(std::size_t width, std::size_t height, const char* what) {
    if (!is_power_of_two(width) || !is_power_of_two(height)) {
        throw SizeError(std::string(what) + ": dimensions must be powers of two, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
}

inline Spectrum fft2(const Field& x) {
    require_power_of_two(x.width(), x.height(), "fft2");
    Spectrum s{x.width(), x.height(), std::vector<Complex>(x.size())};
    const auto v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) s.bins[i] = Complex(v[i], 0.0);
    fft2_inplace(s, false);
    return s;
}

/// Inverse transform; the imaginary residue is discarded.
inline Field ifft2(Spectrum s) {
    require_power_of_two(s.width, s.height, "ifft2");
    fft2_inplace(s, true);
    std::vector<double> out(s.bins.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.bins[i].real();
    return Field(s.width, s.height, std::move(out));
}

/// Per-bin power of GRF(spec) on a width x height grid, scaled so that the
/// expected per-pixel variance (1/N) sum_k P(k) equals spec.variance. The DC
/// bin carries only the mean (power 0), except on a 1x1 grid where the single
/// bin is the whole field.
inline std::vector<double> grf_power(const DataSpec& spec, std::size_t width, std::size_t height) {
    spec.validate();
    const std::size_t n = width * height;
    std::vector<double> power(n, 0.0);
    if (n == 1) {
        power[0] = spec.variance;
        return power;
    }
    double total = 0.0;
    for (std::size_t ky = 0; ky < height; ++ky) {
        for (std::size_t kx = 0; kx < width; ++kx) {
            if (kx == 0 && ky == 0) continue;
            const double p = std::pow(frequency_norm(kx, ky, width, height), -spec.alpha);
            power[ky * width + kx] = p;
            total += p;
        }
    }
    const double scale = spec.variance * static_cast<double>(n) / total;
    for (double& p : power) p *= scale;
    return power;
}

/// Draws one GRF realization: white noise is filtered by sqrt(P(k)) in the
/// Fourier domain (Hermitian symmetry comes from the real input), then the mean
/// is added.
inline Field grf_sample(const DataSpec& spec, std::size_t width, std::size_t height, Seed seed) {
    require_power_of_two(width, height, "grf_sample");
    if (width < 2 || height < 2) throw SizeError("grf_sample: dimensions must be >= 2");
    const auto power = grf_power(spec, width, height);
    Rng rng(seed);
    Spectrum s{width, height, std::vector<Complex>(width * height)};
    for (auto& b : s.bins) b = Complex(rng.normal(), 0.0);
    fft2_inplace(s, false);
    for (std::size_t i = 0; i < s.bins.size(); ++i) s.bins[i] *= std::sqrt(power[i]);
    fft2_inplace(s, true);
    std::vector<double> out(s.bins.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.bins[i].real() + spec.mean;
    return Field(width, height, std::move(out));
}

/// Mean over factor x factor blocks.
inline Field box_downsample(const Field& x, std::size_t factor) {
    if (factor == 0 || x.width() % factor != 0 || x.height() % factor != 0) {
        throw SizeError("box_downsample: factor " + std::to_string(factor) + " does not divide " +
                        std::to_string(x.width()) + "x" + std::to_string(x.height()));
    }
    if (factor == 1) return x;
    const std::size_t w = x.width() / factor;
    const std::size_t h = x.height() / factor;
    const double inv = 1.0 / static_cast<double>(factor * factor);
    std::vector<double> out(w * h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xo = 0; xo < w; ++xo) {
            double acc = 0.0;
            for (std::size_t dy = 0; dy < factor; ++dy) {
                for (std::size_t dx = 0; dx < factor; ++dx) acc += x(xo * factor + dx, y * factor + dy);
            }
            out[y * w + xo] = acc * inv;
        }
    }
    return Field(w, h, std::move(out));
}

/// Radial bin of Fourier index (kx, ky): |k| rounded to the nearest integer.
inline std::size_t radial_bin(std::size_t kx, std::size_t ky, std::size_t width, std::size_t height) noexcept {
    return static_cast<std::size_t>(std::lround(frequency_norm(kx, ky, width, height)));
}

/// Log-log least-squares slope of the radially binned power spectrum, pooled
/// over fields, bins 1..min(width,height)/2. White noise gives ~0; GRF(alpha)
/// gives ~-alpha.
inline double spectral_slope(std::span<const Field> fields) {
    if (fields.empty()) throw DomainError("spectral_slope: no fields");
    const std::size_t w = fields.front().width();
    const std::size_t h = fields.front().height();
    const std::size_t max_bin = std::min(w, h) / 2;
    std::vector<double> power(max_bin + 1, 0.0);
    std::vector<double> count(max_bin + 1, 0.0);
    for (const auto& f : fields) {
        if (f.width() != w || f.height() != h) throw SizeError("spectral_slope: mixed resolutions");
        const auto s = fft2(f);
        for (std::size_t ky = 0; ky < h; ++ky) {
            for (std::size_t kx = 0; kx < w; ++kx) {
                const std::size_t b = radial_bin(kx, ky, w, h);
                if (b == 0 || b > max_bin) continue;
                power[b] += std::norm(s(kx, ky));
                count[b] += 1.0;
            }
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t b = 1; b <= max_bin; ++b) {
        if (count[b] == 0.0 || power[b] <= 0.0) continue;
        const double lx = std::log(static_cast<double>(b));
        const double ly = std::log(power[b] / count[b]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1.0;
    }
    if (n < 2.0) throw SizeError("spectral_slope: field too small to fit a slope");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Element-wise helpers used by the sampler and the losses.

/// a * x + b * y
inline Field axpby(double a, const Field& x, double b, const Field& y) {
    if (!x.same_shape(y)) throw SizeError("axpby: shape mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
    return Field(x.width(), x.height(), std::move(out));
}

/// ||a - b||^2 / N
inline double mean_squared_error(const Field& a, const Field& b) {
    if (!a.same_shape(b)) throw SizeError("mean_squared_error: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

/// Standard-normal field.
inline Field gaussian_noise(std::size_t width, std::size_t height, Seed seed) {
    Rng rng(seed);
    std::vector<double> out(width * height);
    rng.fill_normal(out);
    return Field(width, height, std::move(out));
}

/// 64-bit FNV-1a over the dimensions and the raw value bytes.
inline std::uint64_t content_hash(const Field& x) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t dims[2] = {x.width(), x.height()};
    eat(dims, sizeof dims);
    eat(x.values().data(), x.size() * sizeof(double));
    return h;
}

// ---------------------------------------------------------------------------
// Serialization.
//
// Binary layout, all little-endian:
//   bytes 0..7   magic "RSCFLD01"
//   bytes 8..11  width  (u32)
//   bytes 12..15 height (u32)
//   then width*height IEEE-754 binary64 values, row-major.

inline constexpr std::array<char, 8> kFieldMagic = {'R', 'S', 'C', 'F', 'L', 'D', '0', '1'};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

inline std::uint32_t get_u32(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_field_binary(std::ostream& os, const Field& x) {
    os.write(kFieldMagic.data(), kFieldMagic.size());
    detail::put_u32(os, static_cast<std::uint32_t>(x.width()));
    detail::put_u32(os, static_cast<std::uint32_t>(x.height()));
    for (double v : x.values()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        os.write(b, 8);
    }
}

inline Field read_field_binary(std::istream& is) {
    unsigned char header[16];
    if (!is.read(reinterpret_cast<char*>(header), 16)) throw ParseError("field: truncated header");
    if (std::memcmp(header, kFieldMagic.data(), kFieldMagic.size()) != 0) throw ParseError("field: bad magic");
    const std::size_t w = detail::get_u32(header + 8);
    const std::size_t h = detail::get_u32(header + 12);
    if (w == 0 || h == 0) throw ParseError("field: zero dimension");
    std::vector<double> data(w * h);
    for (auto& v : data) {
        unsigned char b[8];
        if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError("field: truncated data");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        v = std::bit_cast<double>(bits);
    }
    return Field(w, h, std::move(data));
}

inline void save_field(const std::filesystem::path& path, const Field& x) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_field_binary(os, x);
}

inline Field load_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open " + path.string());
    return read_field_binary(is);
}

/// Debug export: one grid row per line, comma separated, 17 significant digits.
inline void write_field_csv(std::ostream& os, const Field& x) {
    os << std::setprecision(17);
    for (std::size_t y = 0; y < x.height(); ++y) {
        for (std::size_t c = 0; c < x.width(); ++c) {
            if (c) os << ',';
            os << x(c, y);
        }
        os << '\n';
    }
}

}  // namespace rescal
