// SPDX-License-Identifier: Apache-2.0
#pragma once

// Forward noising, single Euler reverse steps with a free conditioning level,
// and full (optionally calibrated) sampling.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rescal/error.hpp"
#include "rescal/grid.hpp"
#include "rescal/model.hpp"
#include "rescal/rng.hpp"
#include "rescal/schedule.hpp"
#include "rescal/table.hpp"

namespace rescal {

/// (1 - sigma) x0 + sigma eps for a given noise field.
inline Field add_noise(const Field& x0, double sigma, const Field& eps) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("add_noise: sigma outside [0, 1]");
    return axpby(1.0 - sigma, x0, sigma, eps);
}

/// (1 - sigma) x0 + sigma eps with eps iid standard normal drawn from seed.
inline Field add_noise(const Field& x0, double sigma, Seed seed) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("add_noise: sigma outside [0, 1]");
    return add_noise(x0, sigma, gaussian_noise(x0.width(), x0.height(), seed));
}

/// x_0 .. x_T of one forward noising pass.
struct Trajectory {
    std::vector<Field> fields;
    SigmaSchedule schedule;
    Seed seed{};
};

/// fields[t] = add_noise(x0, sigma_t, derive_seed(seed, t)); fields[0] is x0.
inline Trajectory forward_trajectory(const Field& x0, const SigmaSchedule& schedule, Seed seed) {
    schedule.validate();
    Trajectory tr{{}, schedule, seed};
    tr.fields.reserve(schedule.sigmas.size());
    tr.fields.push_back(x0);
    for (std::size_t t = 1; t < schedule.sigmas.size(); ++t) {
        tr.fields.push_back(add_noise(x0, schedule[t], derive_seed(seed, t)));
    }
    return tr;
}

/// Writes x_000.bin .. x_T.bin plus index.json into dir.
inline void export_trajectory(const Trajectory& tr, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.json");
    if (!index) throw Error("cannot write " + (dir / "index.json").string());
    index << "{\n  \"seed\": " << tr.seed.value << ",\n  \"T\": " << tr.schedule.steps() << ",\n  \"entries\": [\n";
    index.precision(17);
    for (std::size_t t = 0; t < tr.fields.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "x_%03zu.bin", t);
        save_field(dir / name, tr.fields[t]);
        index << "    {\"t\": " << t << ", \"sigma\": " << tr.schedule[t] << ", \"file\": \"" << name << "\"}"
              << (t + 1 < tr.fields.size() ? "," : "") << '\n';
    }
    index << "  ]\n}\n";
}

/// x + phi(x, sigma_cond) (sigma_to - sigma_from), with a pre-bound velocity.
inline Field euler_step(const Field& x, double sigma_from, double sigma_to, double sigma_cond,
                        const BoundVelocity& phi) {
    if (!(sigma_to <= sigma_from)) throw DomainError("euler_step: sigma_to > sigma_from");
    if (!(sigma_to >= 0.0 && sigma_from <= 1.0)) throw DomainError("euler_step: sigma outside [0, 1]");
    return axpby(1.0, x, sigma_to - sigma_from, phi.apply(x, sigma_cond));
}

inline Field euler_step(const Field& x, double sigma_from, double sigma_to, double sigma_cond, const Denoiser& d) {
    return euler_step(x, sigma_from, sigma_to, sigma_cond, d.bind(x.width(), x.height()));
}

/// Default conditioning of the step x_{t+1} -> x_t: the noise level of the
/// state being denoised.
inline double nominal_conditioning(const SigmaSchedule& schedule, std::size_t t) { return schedule.sigmas.at(t + 1); }

/// Conditioning levels for every step, either nominal or from a table.
inline std::vector<double> conditioning_levels(const SigmaSchedule& schedule, const CalibrationTable* table,
                                               std::size_t width, std::size_t height) {
    const std::size_t steps = schedule.steps();
    if (table == nullptr) {
        std::vector<double> c(steps);
        for (std::size_t t = 0; t < steps; ++t) c[t] = nominal_conditioning(schedule, t);
        return c;
    }
    if (table->steps != steps) {
        throw ValidationError("sample: table T = " + std::to_string(table->steps) + " but schedule T = " +
                              std::to_string(steps));
    }
    if (table->width != width || table->height != height) {
        throw ValidationError("sample: table resolution " + std::to_string(table->width) + "x" +
                              std::to_string(table->height) + " does not match " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    return table->sigmas_hat;
}

/// Deterministic Euler sampling from x_T ~ N(0, I).
inline Field sample(const Denoiser& d, const SigmaSchedule& schedule, const CalibrationTable* table,
                    std::size_t width, std::size_t height, Seed seed) {
    schedule.validate();
    const auto cond = conditioning_levels(schedule, table, width, height);
    const auto phi = d.bind(width, height);
    Field x = gaussian_noise(width, height, seed);
    for (std::size_t t = schedule.steps(); t-- > 0;) {
        x = euler_step(x, schedule[t + 1], schedule[t], cond[t], phi);
    }
    return x;
}

inline Field sample(const Denoiser& d, const SigmaSchedule& schedule, const std::optional<CalibrationTable>& table,
                    std::size_t width, std::size_t height, Seed seed) {
    return sample(d, schedule, table ? &*table : nullptr, width, height, seed);
}

}  // namespace rescal
