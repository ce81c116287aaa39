// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rescal/error.hpp"
#include "rescal/rng.hpp"

namespace rescal {

/// Per-resolution calibrated conditioning sigma_hat*_0 .. sigma_hat*_{T-1}.
/// Entry t is the conditioning used by the Euler step x_{t+1} -> x_t.
struct CalibrationTable {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t steps = 0;  // T
    std::string schedule_kind;
    std::vector<double> sigmas_hat;
    std::size_t n_samples = 0;
    Seed seed{};
    std::vector<double> losses;          // calibrated one-step loss per t
    std::vector<double> default_losses;  // loss at the clamped default per t (may be empty)
    std::vector<std::size_t> empty_range_steps;  // steps that fell back to the clamped default

    /// Throws ValidationError on any broken invariant:
    /// 0 <= sigma_hat_t <= sigma_hat_{t+1} <= sigma_hat_T = 1.
    void validate() const {
        if (width == 0 || height == 0) throw ValidationError("table: zero resolution");
        if (steps == 0) throw ValidationError("table: T must be >= 1");
        if (sigmas_hat.size() != steps) {
            throw ValidationError("table: sigmas_hat has " + std::to_string(sigmas_hat.size()) + " entries, T = " +
                                  std::to_string(steps));
        }
        if (losses.size() != steps) throw ValidationError("table: losses length != T");
        if (!default_losses.empty() && default_losses.size() != steps) {
            throw ValidationError("table: default_losses length != T");
        }
        for (std::size_t t = 0; t < steps; ++t) {
            const double s = sigmas_hat[t];
            const double upper = t + 1 < steps ? sigmas_hat[t + 1] : 1.0;
            if (!std::isfinite(s) || s < 0.0) {
                throw ValidationError("table: sigma_hat[" + std::to_string(t) + "] out of range");
            }
            if (s > upper) {
                throw ValidationError("table: sigma_hat[" + std::to_string(t) + "] = " + std::to_string(s) +
                                      " exceeds sigma_hat[" + std::to_string(t + 1) + "] = " + std::to_string(upper));
            }
            if (!std::isfinite(losses[t]) || losses[t] < 0.0) {
                throw ValidationError("table: losses[" + std::to_string(t) + "] invalid");
            }
        }
    }

    friend bool operator==(const CalibrationTable&, const CalibrationTable&) = default;
};

}  // namespace rescal
