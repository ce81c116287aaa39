// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON documents for schedules, model parameters and calibration tables.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rescal/error.hpp"
#include "rescal/model.hpp"
#include "rescal/schedule.hpp"
#include "rescal/table.hpp"

namespace rescal {

using Json = nlohmann::json;

namespace detail {

template <class T>
T require(const Json& j, const char* key, const char* doc) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string(doc) + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(doc) + ": bad value for field '" + key + "': " + e.what());
    }
}

inline Json parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path.string());
    try {
        return Json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace detail

// --- schedule ---------------------------------------------------------------

inline Json schedule_to_json(const SigmaSchedule& s) {
    Json params = Json::object();
    if (s.kind == ScheduleKind::shifted) params["shift"] = s.shift;
    if (s.kind == ScheduleKind::time_shifted) {
        params["base_shift"] = s.base_shift;
        params["ref_pixels"] = s.ref_pixels;
        params["target_pixels"] = s.target_pixels;
        params["shift"] = s.shift;
    }
    return {{"kind", to_string(s.kind)}, {"T", s.steps()}, {"params", params}, {"sigmas", s.sigmas}};
}

inline SigmaSchedule schedule_from_json(const Json& j) {
    constexpr const char* doc = "schedule";
    SigmaSchedule s;
    s.kind = schedule_kind_from_string(detail::require<std::string>(j, "kind", doc));
    const auto steps = detail::require<std::size_t>(j, "T", doc);
    s.sigmas = detail::require<std::vector<double>>(j, "sigmas", doc);
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    if (s.kind != ScheduleKind::linear) s.shift = detail::require<double>(params, "shift", "schedule.params");
    if (s.kind == ScheduleKind::time_shifted) {
        s.base_shift = detail::require<double>(params, "base_shift", "schedule.params");
        s.ref_pixels = detail::require<std::size_t>(params, "ref_pixels", "schedule.params");
        s.target_pixels = detail::require<std::size_t>(params, "target_pixels", "schedule.params");
    }
    if (s.steps() != steps) throw ValidationError("schedule: T does not match the number of sigmas");
    s.validate();
    return s;
}

// --- model parameters -------------------------------------------------------

/// What the fit command persists: the learned spectrum plus the resolution it
/// was learned at, enough to rebuild the frozen denoiser.
struct ModelFile {
    WienerParams params;
    double noise_variance = 1.0;
    std::size_t ref_width = 0;
    std::size_t ref_height = 0;

    Denoiser frozen() const { return Denoiser::frozen(params, ref_width, ref_height, noise_variance); }

    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

inline Json model_to_json(const ModelFile& m) {
    return {{"mean", m.params.mean},         {"amplitude", m.params.amplitude}, {"alpha", m.params.alpha},
            {"noise_variance", m.noise_variance}, {"ref_width", m.ref_width},  {"ref_height", m.ref_height}};
}

inline ModelFile model_from_json(const Json& j) {
    constexpr const char* doc = "model";
    ModelFile m;
    m.params.mean = detail::require<double>(j, "mean", doc);
    m.params.amplitude = detail::require<double>(j, "amplitude", doc);
    m.params.alpha = detail::require<double>(j, "alpha", doc);
    m.noise_variance = detail::require<double>(j, "noise_variance", doc);
    m.ref_width = detail::require<std::size_t>(j, "ref_width", doc);
    m.ref_height = detail::require<std::size_t>(j, "ref_height", doc);
    try {
        m.params.validate();
        if (!(m.noise_variance > 0.0)) throw DomainError("noise_variance must be > 0");
        if (m.ref_width == 0 || m.ref_height == 0) throw DomainError("reference resolution must be positive");
    } catch (const DomainError& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    return m;
}

inline void save_model(const ModelFile& m, const std::filesystem::path& path) {
    detail::write_file(path, model_to_json(m));
}

inline ModelFile load_model(const std::filesystem::path& path) { return model_from_json(detail::parse_file(path)); }

// --- calibration tables -----------------------------------------------------

inline Json table_to_json(const CalibrationTable& t) {
    Json j = {{"width", t.width},
              {"height", t.height},
              {"T", t.steps},
              {"schedule_kind", t.schedule_kind},
              {"sigmas_hat", t.sigmas_hat},
              {"losses", t.losses},
              {"n_samples", t.n_samples},
              {"seed", t.seed.value}};
    if (!t.default_losses.empty()) j["default_losses"] = t.default_losses;
    if (!t.empty_range_steps.empty()) j["empty_range_steps"] = t.empty_range_steps;
    return j;
}

/// Parses and validates; a missing field raises ParseError naming it, a
/// broken invariant raises ValidationError.
inline CalibrationTable table_from_json(const Json& j) {
    constexpr const char* doc = "calibration table";
    CalibrationTable t;
    t.width = detail::require<std::size_t>(j, "width", doc);
    t.height = detail::require<std::size_t>(j, "height", doc);
    t.steps = detail::require<std::size_t>(j, "T", doc);
    t.schedule_kind = detail::require<std::string>(j, "schedule_kind", doc);
    t.sigmas_hat = detail::require<std::vector<double>>(j, "sigmas_hat", doc);
    t.losses = detail::require<std::vector<double>>(j, "losses", doc);
    t.n_samples = detail::require<std::size_t>(j, "n_samples", doc);
    t.seed = Seed{detail::require<std::uint64_t>(j, "seed", doc)};
    if (j.contains("default_losses")) t.default_losses = detail::require<std::vector<double>>(j, "default_losses", doc);
    if (j.contains("empty_range_steps")) {
        t.empty_range_steps = detail::require<std::vector<std::size_t>>(j, "empty_range_steps", doc);
    }
    t.validate();
    return t;
}

inline void save_table(const CalibrationTable& t, const std::filesystem::path& path) {
    detail::write_file(path, table_to_json(t));
}

inline CalibrationTable load_table(const std::filesystem::path& path) {
    return table_from_json(detail::parse_file(path));
}

/// tables/<schedule_kind>/<width>x<height>.json under root.
inline std::filesystem::path table_path(const std::filesystem::path& root, const std::string& schedule_kind,
                                        std::size_t width, std::size_t height) {
    return root / "tables" / schedule_kind / (std::to_string(width) + "x" + std::to_string(height) + ".json");
}

}  // namespace rescal
