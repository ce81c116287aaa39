// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rescal/error.hpp"

namespace rescal {

enum class ScheduleKind { linear, shifted, time_shifted };

inline std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::shifted: return "shifted";
        case ScheduleKind::time_shifted: return "time_shifted";
    }
    return "unknown";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "shifted") return ScheduleKind::shifted;
    if (s == "time_shifted") return ScheduleKind::time_shifted;
    throw ParseError("unknown schedule kind '" + s + "'");
}

/// Ordered noise levels sigma_0 = 0 (clean) < ... < sigma_T = 1 (pure noise).
/// Sampling walks t = T-1 .. 0.
struct SigmaSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    std::vector<double> sigmas;
    double shift = 1.0;       // shifted, time_shifted: the shift actually applied
    double base_shift = 1.0;  // time_shifted only
    std::size_t ref_pixels = 0;
    std::size_t target_pixels = 0;

    std::size_t steps() const noexcept { return sigmas.empty() ? 0 : sigmas.size() - 1; }
    double operator[](std::size_t t) const { return sigmas.at(t); }

    void validate() const {
        if (sigmas.size() < 2) throw ValidationError("schedule needs at least two levels");
        if (sigmas.front() != 0.0 || sigmas.back() != 1.0) {
            throw ValidationError("schedule endpoints must be 0 and 1");
        }
        for (std::size_t t = 1; t < sigmas.size(); ++t) {
            if (!(sigmas[t] > sigmas[t - 1])) {
                throw ValidationError("schedule not strictly increasing at t=" + std::to_string(t));
            }
        }
    }
};

inline SigmaSchedule linear_schedule(std::size_t steps) {
    if (steps == 0) throw DomainError("schedule needs T >= 1");
    SigmaSchedule s;
    s.kind = ScheduleKind::linear;
    s.sigmas.resize(steps + 1);
    for (std::size_t t = 0; t <= steps; ++t) s.sigmas[t] = static_cast<double>(t) / static_cast<double>(steps);
    return s;
}

/// sigma' = shift * u / (1 + (shift - 1) * u).
inline double shift_sigma(double u, double shift) { return shift * u / (1.0 + (shift - 1.0) * u); }

inline SigmaSchedule shifted_schedule(std::size_t steps, double shift) {
    if (!(shift > 0.0) || !std::isfinite(shift)) throw DomainError("shift must be > 0");
    SigmaSchedule s = linear_schedule(steps);
    s.kind = ScheduleKind::shifted;
    s.shift = shift;
    // Interior points only: the endpoints are exact by construction.
    for (std::size_t t = 1; t < steps; ++t) s.sigmas[t] = shift_sigma(s.sigmas[t], shift);
    return s;
}

/// Shift proportional to the pixel count relative to the reference.
inline double resolution_shift(double base_shift, std::size_t ref_pixels, std::size_t target_pixels) {
    if (!(base_shift > 0.0)) throw DomainError("base_shift must be > 0");
    if (ref_pixels == 0 || target_pixels == 0) throw DomainError("pixel counts must be > 0");
    return base_shift * (static_cast<double>(target_pixels) / static_cast<double>(ref_pixels));
}

inline SigmaSchedule time_shifted_schedule(std::size_t steps, double base_shift, std::size_t ref_pixels,
                                           std::size_t target_pixels) {
    SigmaSchedule s = shifted_schedule(steps, resolution_shift(base_shift, ref_pixels, target_pixels));
    s.kind = ScheduleKind::time_shifted;
    s.base_shift = base_shift;
    s.ref_pixels = ref_pixels;
    s.target_pixels = target_pixels;
    return s;
}

}  // namespace rescal
