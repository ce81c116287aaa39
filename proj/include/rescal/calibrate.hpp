// SPDX-License-Identifier: Apache-2.0
#pragma once

// Coarse-to-fine search for the conditioning noise level that minimizes the
// one-step forward/reverse discrepancy, run backward over the schedule with
// the monotonic clamp sigma_hat_t in [0, sigma_hat_{t+1}].

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rescal/error.hpp"
#include "rescal/grid.hpp"
#include "rescal/model.hpp"
#include "rescal/rng.hpp"
#include "rescal/sampler.hpp"
#include "rescal/schedule.hpp"
#include "rescal/table.hpp"

namespace rescal {

struct SearchConfig {
    double eps_coarse = 0.1;
    double eps_fine = 0.01;
    double stride_coarse = 0.02;
    double stride_fine = 0.002;

    void validate() const {
        if (!(stride_fine > 0.0 && stride_fine < stride_coarse)) {
            throw DomainError("SearchConfig: need 0 < stride_fine < stride_coarse");
        }
        if (!(eps_fine > 0.0 && eps_fine < eps_coarse)) {
            throw DomainError("SearchConfig: need 0 < eps_fine < eps_coarse");
        }
    }
};

/// One-step reverse loss at timestep t for many conditioning candidates on
/// fixed draws. For each x0: x_{t+1} and x_t are forward samples that share
/// one noise field, x_hat_t = euler_step(x_{t+1}, sigma_{t+1}, sigma_t, c),
/// and the loss is the mean over x0s of ||x_hat_t - x_t||^2 / N. Candidates
/// are scored in the Fourier domain, which is exact up to rounding.
class OneStepObjective {
public:
    OneStepObjective(const Denoiser& d, std::span<const Field> x0s, const SigmaSchedule& schedule, std::size_t t,
                     Seed seed)
        : phi_(bind_for(d, x0s)) {
        schedule.validate();
        if (t >= schedule.steps()) {
            throw DomainError("one_step_reverse_loss: t = " + std::to_string(t) + " outside [0, " +
                              std::to_string(schedule.steps()) + ")");
        }
        sigma_from_ = schedule[t + 1];
        sigma_to_ = schedule[t];
        nominal_ = nominal_conditioning(schedule, t);
        items_.reserve(x0s.size());
        for (std::size_t i = 0; i < x0s.size(); ++i) {
            const Field eps = gaussian_noise(x0s[i].width(), x0s[i].height(), derive_seed(seed, t, i));
            items_.push_back({fft2(add_noise(x0s[i], sigma_from_, eps)), fft2(add_noise(x0s[i], sigma_to_, eps))});
        }
    }

    double sigma_from() const noexcept { return sigma_from_; }
    double sigma_to() const noexcept { return sigma_to_; }
    double nominal() const noexcept { return nominal_; }

    double operator()(double sigma_tilde) const {
        const double step = sigma_to_ - sigma_from_;
        const double n = static_cast<double>(phi_.width() * phi_.height());
        double total = 0.0;
        for (const auto& item : items_) {
            const auto v = phi_.apply_spectrum(item.noisy_from, sigma_tilde);
            double acc = 0.0;
            for (std::size_t k = 0; k < v.bins.size(); ++k) {
                acc += std::norm(item.noisy_from.bins[k] + step * v.bins[k] - item.noisy_to.bins[k]);
            }
            total += acc / (n * n);
        }
        return total / static_cast<double>(items_.size());
    }

private:
    struct Item {
        Spectrum noisy_from;
        Spectrum noisy_to;
    };

    static BoundVelocity bind_for(const Denoiser& d, std::span<const Field> x0s) {
        detail::require_uniform(x0s, "one_step_reverse_loss");
        return d.bind(x0s.front().width(), x0s.front().height());
    }

    BoundVelocity phi_;
    double sigma_from_ = 0.0;
    double sigma_to_ = 0.0;
    double nominal_ = 0.0;
    std::vector<Item> items_;
};

inline double one_step_reverse_loss(const Denoiser& d, std::span<const Field> x0s, const SigmaSchedule& schedule,
                                    std::size_t t, double sigma_tilde, Seed seed) {
    return OneStepObjective(d, x0s, schedule, t, seed)(sigma_tilde);
}

/// Same quantity evaluated literally in pixel space through euler_step.
inline double one_step_reverse_loss_pixel(const Denoiser& d, std::span<const Field> x0s,
                                          const SigmaSchedule& schedule, std::size_t t, double sigma_tilde,
                                          Seed seed) {
    detail::require_uniform(x0s, "one_step_reverse_loss");
    if (t >= schedule.steps()) throw DomainError("one_step_reverse_loss: t out of range");
    double total = 0.0;
    for (std::size_t i = 0; i < x0s.size(); ++i) {
        const Field eps = gaussian_noise(x0s[i].width(), x0s[i].height(), derive_seed(seed, t, i));
        const Field from = add_noise(x0s[i], schedule[t + 1], eps);
        const Field to = add_noise(x0s[i], schedule[t], eps);
        total += mean_squared_error(euler_step(from, schedule[t + 1], schedule[t], sigma_tilde, d), to);
    }
    return total / static_cast<double>(x0s.size());
}

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

struct StepResult {
    double sigma_hat = 0.0;
    double loss = 0.0;
    double default_loss = 0.0;  // loss at min(nominal, upper), the feasible default
    bool empty_range = false;   // no coarse candidate fits under the upper bound
    Window coarse{};
    Window fine{};
    std::size_t evaluations = 0;
};

namespace detail {

/// lo, lo + stride, ... up to hi inclusive (with a little slack for rounding).
inline std::vector<double> candidates(double lo, double hi, double stride) {
    std::vector<double> out;
    if (hi < lo) return out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / stride + 1e-9));
    out.reserve(count + 1);
    for (std::size_t i = 0; i <= count; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * stride));
    return out;
}

}  // namespace detail

/// One step of the search for an arbitrary loss callable double -> double.
/// The incumbent starts at the nominal level clamped to the upper bound, a
/// coarse sweep covers nominal +- eps_coarse, and a fine sweep covers
/// incumbent +- eps_fine; every candidate lies in [0, upper]. Candidates are
/// visited in ascending order and only a strictly lower loss replaces the
/// incumbent, so ties keep the earlier value.
template <class Loss>
StepResult calibrate_step(Loss&& loss, double nominal, double upper, const SearchConfig& cfg) {
    cfg.validate();
    if (!(upper >= 0.0 && upper <= 1.0)) throw DomainError("calibrate_step: upper bound outside [0, 1]");
    StepResult r;
    r.sigma_hat = std::min(nominal, upper);
    r.default_loss = loss(r.sigma_hat);
    r.loss = r.default_loss;
    ++r.evaluations;

    r.coarse = {std::max(0.0, nominal - cfg.eps_coarse), std::min(upper, nominal + cfg.eps_coarse)};
    if (r.coarse.hi < r.coarse.lo) {
        r.empty_range = true;
        r.fine = {r.sigma_hat, r.sigma_hat};
        return r;
    }
    auto sweep = [&](const Window& w, double stride) {
        for (double c : detail::candidates(w.lo, w.hi, stride)) {
            const double l = loss(c);
            ++r.evaluations;
            if (l < r.loss) {
                r.loss = l;
                r.sigma_hat = c;
            }
        }
    };
    sweep(r.coarse, cfg.stride_coarse);
    r.fine = {std::max(0.0, r.sigma_hat - cfg.eps_fine), std::min(upper, r.sigma_hat + cfg.eps_fine)};
    sweep(r.fine, cfg.stride_fine);
    return r;
}

inline StepResult calibrate_step(const Denoiser& d, std::span<const Field> x0s, const SigmaSchedule& schedule,
                                 std::size_t t, double upper, const SearchConfig& cfg, Seed seed) {
    const OneStepObjective objective(d, x0s, schedule, t, seed);
    return calibrate_step(objective, objective.nominal(), upper, cfg);
}

/// Backward recursion t = T-1 .. 0 starting from the upper bound
/// sigma_hat_T = sigma_T = 1; each result becomes the next step's bound.
inline CalibrationTable calibrate_schedule(const Denoiser& d, std::span<const Field> x0s,
                                           const SigmaSchedule& schedule, const SearchConfig& cfg, Seed seed) {
    detail::require_uniform(x0s, "calibrate_schedule");
    schedule.validate();
    cfg.validate();
    const std::size_t steps = schedule.steps();
    CalibrationTable table;
    table.width = x0s.front().width();
    table.height = x0s.front().height();
    table.steps = steps;
    table.schedule_kind = to_string(schedule.kind);
    table.n_samples = x0s.size();
    table.seed = seed;
    table.sigmas_hat.assign(steps, 0.0);
    table.losses.assign(steps, 0.0);
    table.default_losses.assign(steps, 0.0);
    double upper = schedule.sigmas.back();
    for (std::size_t t = steps; t-- > 0;) {
        const auto r = calibrate_step(d, x0s, schedule, t, upper, cfg, seed);
        table.sigmas_hat[t] = r.sigma_hat;
        table.losses[t] = r.loss;
        table.default_losses[t] = r.default_loss;
        if (r.empty_range) table.empty_range_steps.insert(table.empty_range_steps.begin(), t);
        upper = r.sigma_hat;
    }
    table.validate();
    return table;
}

}  // namespace rescal
