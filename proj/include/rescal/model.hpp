// SPDX-License-Identifier: Apache-2.0
#pragma once

// Frequency-diagonal Wiener velocity model.
//
// Convention: x_data is clean, eps is noise, x_sigma = (1 - sigma) x_data +
// sigma eps, and the velocity is dx/dsigma = eps - x_data. For Gaussian data
// the conditional expectation of that target is diagonal in the Fourier basis:
// per bin, v = A (c - (1 - sigma) m) - m with
//
//   A = (sigma n^2 - (1 - sigma) s^2) / ((1 - sigma)^2 s^2 + sigma^2 n^2),
//
// s^2 the signal power of the bin, n^2 the noise power and m the prior mean
// (which only touches DC).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rescal/error.hpp"
#include "rescal/fft.hpp"
#include "rescal/grid.hpp"
#include "rescal/rng.hpp"
#include "rescal/schedule.hpp"

namespace rescal {

/// Wiener gain for one Fourier bin. A bin with no signal power at sigma = 0 is
/// 0/0; it takes the sigma = 0 value of every other bin, -1.
inline double wiener_gain(double signal_power, double noise_power, double sigma) {
    const double keep = 1.0 - sigma;
    const double den = keep * keep * signal_power + sigma * sigma * noise_power;
    if (den <= 0.0) return -1.0;
    return (sigma * noise_power - keep * signal_power) / den;
}

/// Parametric signal power S(nu) = amplitude * nu^-alpha over normalized
/// frequency nu = |k| / width; the DC bin carries only the mean.
struct WienerParams {
    double mean = 0.0;
    double amplitude = 1.0;
    double alpha = 2.0;

    void validate() const {
        if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw DomainError("WienerParams.amplitude must be > 0");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("WienerParams.alpha must be >= 0");
        if (!std::isfinite(mean)) throw DomainError("WienerParams.mean must be finite");
    }

    /// Per-bin power at a given resolution.
    std::vector<double> power(std::size_t width, std::size_t height) const {
        std::vector<double> p(width * height, 0.0);
        for (std::size_t ky = 0; ky < height; ++ky) {
            const double fy = static_cast<double>(signed_frequency(ky, height)) / static_cast<double>(height);
            for (std::size_t kx = 0; kx < width; ++kx) {
                if (kx == 0 && ky == 0) continue;
                const double fx = static_cast<double>(signed_frequency(kx, width)) / static_cast<double>(width);
                p[ky * width + kx] = amplitude * std::pow(std::sqrt(fx * fx + fy * fy), -alpha);
            }
        }
        return p;
    }

    /// Parameters that reproduce grf_power(spec, size, size) exactly on a
    /// square grid.
    static WienerParams matching(const DataSpec& spec, std::size_t size) {
        const auto p = grf_power(spec, size, size);
        // Bin (1, 0) has |k| = 1, so P = C and amplitude = C * size^-alpha.
        return {spec.mean, p[1] * std::pow(static_cast<double>(size), -spec.alpha), spec.alpha};
    }

    friend bool operator==(const WienerParams&, const WienerParams&) = default;
};

enum class DenoiserKind { oracle, frozen, fitted };

inline std::string to_string(DenoiserKind k) {
    switch (k) {
        case DenoiserKind::oracle: return "oracle";
        case DenoiserKind::frozen: return "frozen";
        case DenoiserKind::fitted: return "fitted";
    }
    return "unknown";
}

/// A Denoiser's prior evaluated at one resolution. velocity() on a Denoiser
/// builds one of these per call; hot loops bind it once.
class BoundVelocity {
public:
    BoundVelocity(std::size_t width, std::size_t height, std::vector<double> signal_power, double mean,
                  double noise_variance)
        : width_(width), height_(height), power_(std::move(signal_power)), mean_(mean), noise_(noise_variance) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    double mean() const noexcept { return mean_; }
    double noise_variance() const noexcept { return noise_; }
    std::span<const double> signal_power() const noexcept { return power_; }

    double gain(std::size_t bin, double sigma) const { return wiener_gain(power_[bin], noise_, sigma); }

    /// Spectrum of the velocity given the spectrum of the input field.
    Spectrum apply_spectrum(const Spectrum& x, double sigma) const {
        check(x.width, x.height, sigma);
        const double n = static_cast<double>(width_ * height_);
        Spectrum out = x;
        out.bins[0] -= (1.0 - sigma) * mean_ * n;
        for (std::size_t i = 0; i < out.bins.size(); ++i) out.bins[i] *= gain(i, sigma);
        out.bins[0] -= mean_ * n;
        return out;
    }

    Field apply(const Field& x, double sigma) const {
        check(x.width(), x.height(), sigma);
        return ifft2(apply_spectrum(fft2(x), sigma));
    }

private:
    void check(std::size_t w, std::size_t h, double sigma) const {
        if (w != width_ || h != height_) throw SizeError("velocity: field does not match the bound resolution");
        if (!(sigma >= 0.0 && sigma <= 1.0)) {
            throw DomainError("velocity: sigma_cond " + std::to_string(sigma) + " outside [0, 1]");
        }
    }

    std::size_t width_;
    std::size_t height_;
    std::vector<double> power_;
    double mean_;
    double noise_;
};

/// The velocity model phi(x, sigma_cond).
///  - oracle: signal power is the true GRF(spec) power at the input's own resolution.
///  - frozen: parameters fitted at a reference resolution, looked up by normalized
///    frequency at whatever resolution it is applied to.
///  - fitted: parameters learned by fit_spectrum, no reference bookkeeping.
class Denoiser {
public:
    static Denoiser oracle(const DataSpec& spec, double noise_variance = 1.0) {
        spec.validate();
        Denoiser d(DenoiserKind::oracle, noise_variance);
        d.spec_ = spec;
        return d;
    }

    static Denoiser frozen(const WienerParams& params, std::size_t ref_width, std::size_t ref_height,
                           double noise_variance = 1.0) {
        params.validate();
        if (ref_width == 0 || ref_height == 0) throw DomainError("frozen denoiser needs a reference resolution");
        Denoiser d(DenoiserKind::frozen, noise_variance);
        d.params_ = params;
        d.ref_width_ = ref_width;
        d.ref_height_ = ref_height;
        return d;
    }

    static Denoiser fitted(const WienerParams& params, double noise_variance = 1.0) {
        params.validate();
        Denoiser d(DenoiserKind::fitted, noise_variance);
        d.params_ = params;
        return d;
    }

    DenoiserKind kind() const noexcept { return kind_; }
    const DataSpec& spec() const noexcept { return spec_; }
    const WienerParams& params() const noexcept { return params_; }
    std::size_t ref_width() const noexcept { return ref_width_; }
    std::size_t ref_height() const noexcept { return ref_height_; }
    double noise_variance() const noexcept { return noise_; }
    double prior_mean() const noexcept { return kind_ == DenoiserKind::oracle ? spec_.mean : params_.mean; }

    std::vector<double> signal_power(std::size_t width, std::size_t height) const {
        if (kind_ == DenoiserKind::oracle) return grf_power(spec_, width, height);
        return params_.power(width, height);
    }

    BoundVelocity bind(std::size_t width, std::size_t height) const {
        require_power_of_two(width, height, "velocity");
        return BoundVelocity(width, height, signal_power(width, height), prior_mean(), noise_);
    }

private:
    Denoiser(DenoiserKind kind, double noise_variance) : kind_(kind), noise_(noise_variance) {
        if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
            throw DomainError("noise_variance must be > 0");
        }
    }

    DenoiserKind kind_;
    double noise_;
    DataSpec spec_{};
    WienerParams params_{};
    std::size_t ref_width_ = 0;
    std::size_t ref_height_ = 0;
};

/// phi(x, sigma_cond), returned in pixel space.
inline Field velocity(const Denoiser& d, const Field& x, double sigma_cond) {
    return d.bind(x.width(), x.height()).apply(x, sigma_cond);
}

// ---------------------------------------------------------------------------
// Flow-matching objective.

namespace detail {

inline void require_uniform(std::span<const Field> samples, const char* what) {
    if (samples.empty()) throw DomainError(std::string(what) + ": empty sample list");
    for (const auto& s : samples) {
        if (!s.same_shape(samples.front())) throw SizeError(std::string(what) + ": mixed resolutions");
    }
}

}  // namespace detail

/// Monte-Carlo estimate of E ||phi(x_sigma, sigma) - (eps - x_data)||^2 / N
/// with the draws frozen at construction, so many denoisers can be scored on
/// identical draws. Each item draws `draws_per_sample` noise levels uniformly
/// from the schedule's levels and one noise field per level; its stream is
/// seeded from (seed, content hash), so a duplicated item repeats its draws.
/// Evaluation runs in the Fourier domain (Parseval), avoiding inverse FFTs.
class FlowMatchingObjective {
public:
    FlowMatchingObjective(std::span<const Field> samples, const SigmaSchedule& schedule, Seed seed,
                          std::size_t draws_per_sample = 8) {
        detail::require_uniform(samples, "flow_matching_loss");
        schedule.validate();
        if (draws_per_sample == 0) throw DomainError("flow_matching_loss: draws_per_sample must be >= 1");
        width_ = samples.front().width();
        height_ = samples.front().height();
        require_power_of_two(width_, height_, "flow_matching_loss");
        for (const auto& x : samples) {
            Rng rng(derive_seed(seed, content_hash(x)));
            for (std::size_t j = 0; j < draws_per_sample; ++j) {
                const auto t = std::min<std::size_t>(
                    static_cast<std::size_t>(rng.uniform() * static_cast<double>(schedule.sigmas.size())),
                    schedule.steps());
                const double sigma = schedule[t];
                std::vector<double> eps(x.size());
                rng.fill_normal(eps);
                const Field noise(width_, height_, std::move(eps));
                draws_.push_back({sigma, fft2(axpby(1.0 - sigma, x, sigma, noise)), fft2(axpby(1.0, noise, -1.0, x))});
            }
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    double evaluate(const Denoiser& d) const {
        const auto bound = d.bind(width_, height_);
        const double n = static_cast<double>(width_ * height_);
        double total = 0.0;
        for (const auto& draw : draws_) {
            const auto v = bound.apply_spectrum(draw.noisy, draw.sigma);
            double acc = 0.0;
            for (std::size_t i = 0; i < v.bins.size(); ++i) acc += std::norm(v.bins[i] - draw.target.bins[i]);
            total += acc / (n * n);
        }
        return total / static_cast<double>(draws_.size());
    }

private:
    struct Draw {
        double sigma;
        Spectrum noisy;
        Spectrum target;
    };

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Draw> draws_;
};

inline double flow_matching_loss(const Denoiser& d, std::span<const Field> samples, const SigmaSchedule& schedule,
                                 Seed seed, std::size_t draws_per_sample = 8) {
    return FlowMatchingObjective(samples, schedule, seed, draws_per_sample).evaluate(d);
}

// ---------------------------------------------------------------------------
// Spectrum fitting.

struct FitOptions {
    std::size_t schedule_steps = 50;
    std::size_t draws_per_sample = 8;
    double amplitude_min = 0.01;
    double amplitude_max = 100.0;
    std::size_t amplitude_points = 41;  // log-spaced, 0.1 decade apart
    double alpha_max = 4.0;
    double alpha_step = 0.25;
    std::size_t golden_iterations = 40;
};

struct FitResult {
    WienerParams params;
    double loss = 0.0;       // loss of params on the training draws
    double grid_loss = 0.0;  // best loss on the coarse grid
    WienerParams grid_params;
};

namespace detail {

/// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
double golden_section(F&& f, double lo, double hi, std::size_t iterations) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (std::size_t i = 0; i < iterations; ++i) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

}  // namespace detail

/// Learns (amplitude, alpha, mean) by minimizing the flow-matching loss: a
/// log-grid over amplitude and a linear grid over alpha (ties go to smaller
/// alpha, then smaller amplitude), then one golden-section pass per axis
/// around the grid optimum. The mean is the average of the sample means.
inline FitResult fit_spectrum(std::span<const Field> samples, double noise_variance, Seed seed,
                              const FitOptions& opt = {}) {
    if (samples.size() < 8) throw DomainError("fit_spectrum: need at least 8 samples");
    detail::require_uniform(samples, "fit_spectrum");
    double mean = 0.0;
    bool degenerate = true;
    for (const auto& s : samples) {
        const auto st = field_stats(s);
        mean += st.mean;
        if (st.variance > 0.0) degenerate = false;
    }
    if (degenerate) throw DomainError("fit_spectrum: degenerate input (all samples are constant)");
    mean /= static_cast<double>(samples.size());

    const FlowMatchingObjective objective(samples, linear_schedule(opt.schedule_steps), seed, opt.draws_per_sample);
    auto loss_of = [&](double amplitude, double alpha) {
        return objective.evaluate(Denoiser::fitted({mean, amplitude, alpha}, noise_variance));
    };

    const double log_lo = std::log10(opt.amplitude_min);
    const double log_step = (std::log10(opt.amplitude_max) - log_lo) / static_cast<double>(opt.amplitude_points - 1);
    const auto alpha_points = static_cast<std::size_t>(std::floor(opt.alpha_max / opt.alpha_step + 1e-9)) + 1;

    double best = std::numeric_limits<double>::infinity();
    double best_log_amp = log_lo;
    double best_alpha = 0.0;
    for (std::size_t ia = 0; ia < alpha_points; ++ia) {
        const double alpha = static_cast<double>(ia) * opt.alpha_step;
        for (std::size_t ip = 0; ip < opt.amplitude_points; ++ip) {
            const double log_amp = log_lo + static_cast<double>(ip) * log_step;
            const double l = loss_of(std::pow(10.0, log_amp), alpha);
            if (l < best) {
                best = l;
                best_log_amp = log_amp;
                best_alpha = alpha;
            }
        }
    }

    FitResult result;
    result.grid_loss = best;
    result.grid_params = {mean, std::pow(10.0, best_log_amp), best_alpha};

    double alpha = best_alpha;
    double log_amp = best_log_amp;
    double current = best;
    const double a_refined = detail::golden_section(
        [&](double a) { return loss_of(std::pow(10.0, log_amp), a); }, std::max(0.0, alpha - opt.alpha_step),
        std::min(opt.alpha_max, alpha + opt.alpha_step), opt.golden_iterations);
    if (const double l = loss_of(std::pow(10.0, log_amp), a_refined); l < current) {
        current = l;
        alpha = a_refined;
    }
    const double p_refined = detail::golden_section([&](double p) { return loss_of(std::pow(10.0, p), alpha); },
                                                    log_amp - log_step, log_amp + log_step, opt.golden_iterations);
    if (const double l = loss_of(std::pow(10.0, p_refined), alpha); l < current) {
        current = l;
        log_amp = p_refined;
    }
    result.params = {mean, std::pow(10.0, log_amp), alpha};
    result.loss = current;
    return result;
}

}  // namespace rescal
