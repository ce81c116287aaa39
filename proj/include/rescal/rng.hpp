// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace rescal {

/// Seed for every randomized operation. Same seed + same parameters gives
/// bit-identical output on every platform.
struct Seed {
    std::uint64_t value = 0;

    friend bool operator==(Seed, Seed) = default;
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent sub-seed from (seed, index). Used for per-timestep,
/// per-sample and per-item streams.
constexpr Seed derive_seed(Seed seed, std::uint64_t index) noexcept {
    return Seed{mix64(seed.value ^ mix64(index + 0x632be59bd9b4e019ULL))};
}

constexpr Seed derive_seed(Seed seed, std::uint64_t a, std::uint64_t b) noexcept {
    return derive_seed(derive_seed(seed, a), b);
}

/// Gaussian/uniform stream on top of mt19937_64. The standard distributions
/// are implementation-defined, so the transforms are done here.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(mix64(seed.value)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal();
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rescal
