// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rescal/model.hpp"

using namespace rescal;

namespace {

const DataSpec kSpec{0.0, 1.0, 2.0};

std::vector<Denoiser> zero_mean_denoisers() {
    return {Denoiser::oracle(kSpec), Denoiser::frozen(WienerParams::matching(kSpec, 64), 64, 64),
            Denoiser::fitted({0.0, 0.3, 1.5}), Denoiser::oracle({0.0, 2.0, 0.0}, 0.5)};
}

// Velocity computed from the per-bin formula with an O(N^2) DFT, for a
// square field, independent of the library's FFT and bookkeeping.
Field naive_velocity(const Field& x, const std::vector<double>& power, double mean, double noise, double sigma) {
    const std::size_t n = x.width();
    const double npix = static_cast<double>(n * n);
    std::vector<Complex> spec(n * n);
    for (std::size_t ky = 0; ky < n; ++ky) {
        for (std::size_t kx = 0; kx < n; ++kx) {
            Complex acc{0, 0};
            for (std::size_t y = 0; y < n; ++y) {
                for (std::size_t xx = 0; xx < n; ++xx) {
                    acc += x(xx, y) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(kx * xx + ky * y) /
                                                          static_cast<double>(n));
                }
            }
            const std::size_t i = ky * n + kx;
            const double s2 = power[i];
            const double keep = 1.0 - sigma;
            const double den = keep * keep * s2 + sigma * sigma * noise;
            const double a = den > 0 ? (sigma * noise - keep * s2) / den : -1.0;
            const Complex m = i == 0 ? Complex(mean * npix, 0.0) : Complex(0.0, 0.0);
            spec[i] = a * (acc - keep * m) - m;
        }
    }
    std::vector<double> out(n * n);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t xx = 0; xx < n; ++xx) {
            Complex acc{0, 0};
            for (std::size_t ky = 0; ky < n; ++ky) {
                for (std::size_t kx = 0; kx < n; ++kx) {
                    acc += spec[ky * n + kx] * std::polar(1.0, 2.0 * std::numbers::pi *
                                                                   static_cast<double>(kx * xx + ky * y) /
                                                                   static_cast<double>(n));
                }
            }
            out[y * n + xx] = acc.real() / npix;
        }
    }
    return Field(n, n, out);
}

std::vector<Field> grf_batch(const DataSpec& spec, std::size_t size, std::size_t n, Seed seed) {
    std::vector<Field> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(grf_sample(spec, size, size, derive_seed(seed, i)));
    return out;
}

}  // namespace

TEST(WienerGain, SymmetricCaseIsZero) { EXPECT_DOUBLE_EQ(wiener_gain(1.0, 1.0, 0.5), 0.0); }

TEST(WienerGain, HandEvaluated) { EXPECT_DOUBLE_EQ(wiener_gain(4.0, 1.0, 0.5), -1.2); }

TEST(WienerGain, EndpointValues) {
    for (double s2 : {0.0, 0.1, 1.0, 7.0}) {
        EXPECT_DOUBLE_EQ(wiener_gain(s2, 1.0, 0.0), -1.0);
        EXPECT_DOUBLE_EQ(wiener_gain(s2, 1.0, 1.0), 1.0);
    }
}

TEST(WienerGain, MatchesMonteCarloRegressionSlope) {
    // Draw (x_data, eps), form x_sigma, regress eps - x_data on x_sigma.
    Rng rng(Seed{2024});
    const double s2 = 4.0, n2 = 1.0, sigma = 0.5;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double data = 2.0 * rng.normal();
        const double eps = rng.normal();
        const double x = (1 - sigma) * data + sigma * eps;
        sxy += x * (eps - data);
        sxx += x * x;
    }
    const double slope = sxy / sxx;
    EXPECT_NEAR(slope / wiener_gain(s2, n2, sigma), 1.0, 0.02);
}

TEST(Velocity, ScalarSystems) {
    const Field one(1, 1, {1.0});
    EXPECT_NEAR(velocity(Denoiser::oracle({0.0, 1.0, 2.0}), one, 0.5)[0], 0.0, 1e-15);
    EXPECT_NEAR(velocity(Denoiser::oracle({0.0, 4.0, 2.0}), one, 0.5)[0], -1.2, 1e-15);
}

TEST(Velocity, ZeroFieldGivesZeroVelocity) {
    for (const auto& d : zero_mean_denoisers()) {
        const Field v = velocity(d, Field(16, 16), 0.3);
        for (double x : v.values()) EXPECT_EQ(x, 0.0);
    }
}

TEST(Velocity, LinearInInputForZeroMean) {
    const Field x = grf_sample(kSpec, 16, 16, Seed{1});
    for (const auto& d : zero_mean_denoisers()) {
        for (double sigma : {0.1, 0.5, 0.9}) {
            const Field lhs = velocity(d, axpby(2.5, x, 0.0, x), sigma);
            const Field rhs = velocity(d, x, sigma);
            for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(lhs[i], 2.5 * rhs[i], 1e-9);
        }
    }
}

TEST(Velocity, PureDataLimitIsMinusX) {
    const Field x = grf_sample(kSpec, 16, 16, Seed{2});
    for (const auto& d : zero_mean_denoisers()) {
        const Field v = velocity(d, x, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(v[i], -x[i], 1e-12);
    }
}

TEST(Velocity, MatchesNaiveDftWithNonzeroMean) {
    const DataSpec spec{0.7, 1.3, 1.5};
    const Denoiser d = Denoiser::oracle(spec, 0.8);
    const Field x = grf_sample(spec, 8, 8, Seed{3});
    for (double sigma : {0.0, 0.25, 0.6, 1.0}) {
        const Field fast = velocity(d, x, sigma);
        const Field slow = naive_velocity(x, grf_power(spec, 8, 8), 0.7, 0.8, sigma);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-10) << "sigma " << sigma;
    }
}

TEST(Velocity, RejectsConditioningOutsideUnitInterval) {
    const Field x(4, 4);
    const Denoiser d = Denoiser::oracle(kSpec);
    EXPECT_THROW(velocity(d, x, -0.01), DomainError);
    EXPECT_THROW(velocity(d, x, 1.01), DomainError);
    EXPECT_NO_THROW(velocity(d, x, 1.0));
}

TEST(Velocity, RejectsNonPowerOfTwo) {
    EXPECT_THROW(velocity(Denoiser::oracle(kSpec), Field(6, 6), 0.5), SizeError);
}

TEST(WienerParams, MatchingReproducesGrfPowerAtReference) {
    const auto p = WienerParams::matching(kSpec, 64).power(64, 64);
    const auto q = grf_power(kSpec, 64, 64);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12 * std::max(1.0, q[i]));
}

TEST(WienerParams, FrozenLooksUpNormalizedFrequency) {
    const WienerParams w{0.0, 0.02, 2.0};
    const Denoiser d = Denoiser::frozen(w, 64, 64);
    const auto p = d.signal_power(16, 16);
    // Bin (3, 4) of a 16 grid: nu = 5 / 16.
    EXPECT_NEAR(p[4 * 16 + 3], 0.02 * std::pow(5.0 / 16.0, -2.0), 1e-12);
    EXPECT_EQ(p[0], 0.0);
}

TEST(WienerParams, FrozenUnderestimatesPowerAtLowResolution) {
    // Per-pixel variance the 64-reference model assumes on a 16 grid is below
    // the true GRF variance there (the normalization sums fewer bins).
    const Denoiser d = Denoiser::frozen(WienerParams::matching(kSpec, 64), 64, 64);
    double assumed = 0.0, truth = 0.0;
    for (double v : d.signal_power(16, 16)) assumed += v;
    for (double v : grf_power(kSpec, 16, 16)) truth += v;
    EXPECT_LT(assumed, truth);
}

TEST(WienerParams, Validation) {
    EXPECT_THROW(WienerParams({0.0, 0.0, 1.0}).validate(), DomainError);
    EXPECT_THROW(WienerParams({0.0, 1.0, -0.5}).validate(), DomainError);
    EXPECT_THROW(Denoiser::fitted({0.0, 1.0, 1.0}, 0.0), DomainError);
}

TEST(FlowMatchingLoss, NonNegativeAndDeterministic) {
    const auto xs = grf_batch(kSpec, 16, 8, Seed{4});
    const auto sch = linear_schedule(20);
    const Denoiser d = Denoiser::fitted({0.0, 0.1, 1.0});
    const double a = flow_matching_loss(d, xs, sch, Seed{5});
    EXPECT_GE(a, 0.0);
    EXPECT_EQ(a, flow_matching_loss(d, xs, sch, Seed{5}));
    EXPECT_NE(a, flow_matching_loss(d, xs, sch, Seed{6}));
}

TEST(FlowMatchingLoss, DuplicatingSamplesLeavesLossUnchanged) {
    auto xs = grf_batch(kSpec, 16, 6, Seed{7});
    const auto sch = linear_schedule(20);
    const Denoiser d = Denoiser::oracle(kSpec);
    const double once = flow_matching_loss(d, xs, sch, Seed{8});
    const auto copy = xs;
    xs.insert(xs.end(), copy.begin(), copy.end());
    EXPECT_NEAR(flow_matching_loss(d, xs, sch, Seed{8}), once, 1e-12 * once);
}

TEST(FlowMatchingLoss, MatchesPixelDomainEvaluation) {
    // Rebuild the same draws from the documented seeding and score in pixels.
    const auto xs = grf_batch(kSpec, 8, 3, Seed{9});
    const auto sch = linear_schedule(10);
    const Denoiser d = Denoiser::fitted({0.0, 0.05, 2.0});
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& x : xs) {
        Rng rng(derive_seed(Seed{10}, content_hash(x)));
        for (int j = 0; j < 8; ++j) {
            const auto t = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform() * 11.0), 10);
            std::vector<double> e(x.size());
            rng.fill_normal(e);
            const Field eps(8, 8, e);
            const Field xt = axpby(1.0 - sch[t], x, sch[t], eps);
            total += mean_squared_error(velocity(d, xt, sch[t]), axpby(1.0, eps, -1.0, x));
            ++count;
        }
    }
    EXPECT_NEAR(flow_matching_loss(d, xs, sch, Seed{10}), total / static_cast<double>(count), 1e-12);
}

TEST(FlowMatchingLoss, OracleBeatsMismatchedFrozenModels) {
    const auto sch = linear_schedule(50);
    const Denoiser oracle = Denoiser::oracle(kSpec);
    const Denoiser frozen = Denoiser::frozen(WienerParams::matching(kSpec, 64), 64, 64);
    for (std::size_t size : {8u, 16u, 32u}) {
        const auto xs = grf_batch(kSpec, size, 32, Seed{11});
        EXPECT_LT(flow_matching_loss(oracle, xs, sch, Seed{12}), flow_matching_loss(frozen, xs, sch, Seed{12}))
            << size;
    }
}

TEST(FlowMatchingLoss, RejectsEmptyAndMixedInputs) {
    const auto sch = linear_schedule(10);
    const Denoiser d = Denoiser::oracle(kSpec);
    EXPECT_THROW(flow_matching_loss(d, std::vector<Field>{}, sch, Seed{1}), DomainError);
    const std::vector<Field> mixed{Field(8, 8), Field(16, 16)};
    EXPECT_THROW(flow_matching_loss(d, mixed, sch, Seed{1}), SizeError);
}

TEST(FitSpectrum, RecoversGeneratingExponent) {
    const auto xs = grf_batch(kSpec, 64, 16, Seed{13});
    const FitResult fit = fit_spectrum(xs, 1.0, Seed{14});
    EXPECT_GE(fit.params.alpha, 1.8);
    EXPECT_LE(fit.params.alpha, 2.2);
    EXPECT_NEAR(fit.params.mean, 0.0, 1e-12);
}

TEST(FitSpectrum, NoGridPointBeatsTheFit) {
    const auto xs = grf_batch({0.2, 1.0, 1.0}, 16, 8, Seed{15});
    FitOptions opt;
    opt.schedule_steps = 20;
    const FitResult fit = fit_spectrum(xs, 1.0, Seed{16}, opt);
    const auto sch = linear_schedule(20);
    EXPECT_LE(fit.loss, fit.grid_loss);
    for (double alpha = 0.0; alpha <= 4.0; alpha += 0.5) {
        for (double lg = -2.0; lg <= 2.0 + 1e-9; lg += 0.4) {
            const double l =
                flow_matching_loss(Denoiser::fitted({fit.params.mean, std::pow(10.0, lg), alpha}), xs, sch, Seed{16});
            EXPECT_LE(fit.loss, l);
        }
    }
    EXPECT_NEAR(flow_matching_loss(Denoiser::fitted(fit.params), xs, sch, Seed{16}), fit.loss, 1e-12);
}

TEST(FitSpectrum, MeanIsAverageOfSampleMeans) {
    const auto xs = grf_batch({1.5, 1.0, 2.0}, 16, 8, Seed{17});
    FitOptions opt;
    opt.schedule_steps = 10;
    opt.amplitude_points = 5;
    EXPECT_NEAR(fit_spectrum(xs, 1.0, Seed{1}, opt).params.mean, 1.5, 1e-12);
}

TEST(FitSpectrum, RejectsDegenerateAndTooFewSamples) {
    const std::vector<Field> flat(8, Field::constant(8, 8, 2.0));
    EXPECT_THROW(fit_spectrum(flat, 1.0, Seed{1}), DomainError);
    const auto few = grf_batch(kSpec, 8, 7, Seed{1});
    EXPECT_THROW(fit_spectrum(few, 1.0, Seed{1}), DomainError);
}
