// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration: a flat "key = value" text file with dotted keys,
// overridden by RESCAL_* environment variables, overridden by flags.
//
//   data.mean data.variance data.alpha
//   ref_resolution eval_resolutions          (comma separated)
//   schedule.kind schedule.T schedule.shift
//   search.eps_coarse search.stride_coarse search.eps_fine search.stride_fine
//   n_fit n_calibration n_eval n_diagnose noise_variance seed output_dir
//
// Environment names are the key uppercased with dots turned into
// underscores: schedule.kind -> RESCAL_SCHEDULE_KIND.

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rescal/calibrate.hpp"
#include "rescal/error.hpp"
#include "rescal/grid.hpp"
#include "rescal/rng.hpp"
#include "rescal/schedule.hpp"

namespace rescal {

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::linear;
    std::size_t steps = 50;
    double shift = 1.0;  // shifted: the shift; time_shifted: the base shift at the reference resolution
};

struct RunConfig {
    DataSpec data;
    std::size_t ref_resolution = 64;
    std::vector<std::size_t> eval_resolutions{8, 16, 64};
    ScheduleConfig schedule;
    SearchConfig search;
    std::size_t n_fit = 64;
    std::size_t n_calibration = 64;
    std::size_t n_eval = 256;
    std::size_t n_diagnose = 32;
    double noise_variance = 1.0;
    Seed seed{20240601};
    std::filesystem::path output_dir = "out";

    void validate() const {
        data.validate();
        if (ref_resolution < 2 || !is_power_of_two(ref_resolution)) {
            throw ValidationError("ref_resolution must be a power of two >= 2");
        }
        if (eval_resolutions.empty()) throw ValidationError("eval_resolutions is empty");
        for (auto r : eval_resolutions) {
            if (r < 2 || !is_power_of_two(r)) throw ValidationError("eval resolution " + std::to_string(r) + " is not a power of two >= 2");
        }
        if (schedule.steps < 1) throw ValidationError("schedule.T must be >= 1");
        if (!(schedule.shift > 0.0)) throw ValidationError("schedule.shift must be > 0");
        search.validate();
        if (n_fit < 8) throw ValidationError("n_fit must be >= 8");
        if (n_calibration < 1) throw ValidationError("n_calibration must be >= 1");
        if (n_eval < 16) throw ValidationError("n_eval must be >= 16");
        if (n_diagnose < 1) throw ValidationError("n_diagnose must be >= 1");
        if (!(noise_variance > 0.0)) throw ValidationError("noise_variance must be > 0");
    }

    /// The sampling schedule used at a given resolution.
    SigmaSchedule schedule_for(std::size_t resolution) const {
        switch (schedule.kind) {
            case ScheduleKind::linear: return linear_schedule(schedule.steps);
            case ScheduleKind::shifted: return shifted_schedule(schedule.steps, schedule.shift);
            case ScheduleKind::time_shifted:
                return time_shifted_schedule(schedule.steps, schedule.shift, ref_resolution * ref_resolution,
                                             resolution * resolution);
        }
        throw ValidationError("unknown schedule kind");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
        throw ParseError("config: '" + key + "' expects a number, got '" + v + "'");
    }
    return d;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw ParseError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    errno = 0;
    const auto n = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ParseError("config: '" + key + "' is out of range");
    return n;
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(parse_uint(key, trim(item))));
    if (out.empty()) throw ParseError("config: '" + key + "' is empty");
    return out;
}

inline const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>>&
config_setters() {
    using R = RunConfig;
    static const std::map<std::string, std::function<void(R&, const std::string&, const std::string&)>> setters{
        {"data.mean", [](R& c, auto& k, auto& v) { c.data.mean = parse_real(k, v); }},
        {"data.variance", [](R& c, auto& k, auto& v) { c.data.variance = parse_real(k, v); }},
        {"data.alpha", [](R& c, auto& k, auto& v) { c.data.alpha = parse_real(k, v); }},
        {"ref_resolution", [](R& c, auto& k, auto& v) { c.ref_resolution = parse_uint(k, v); }},
        {"eval_resolutions", [](R& c, auto& k, auto& v) { c.eval_resolutions = parse_list(k, v); }},
        {"schedule.kind", [](R& c, auto&, auto& v) { c.schedule.kind = schedule_kind_from_string(v); }},
        {"schedule.T", [](R& c, auto& k, auto& v) { c.schedule.steps = parse_uint(k, v); }},
        {"schedule.shift", [](R& c, auto& k, auto& v) { c.schedule.shift = parse_real(k, v); }},
        {"search.eps_coarse", [](R& c, auto& k, auto& v) { c.search.eps_coarse = parse_real(k, v); }},
        {"search.stride_coarse", [](R& c, auto& k, auto& v) { c.search.stride_coarse = parse_real(k, v); }},
        {"search.eps_fine", [](R& c, auto& k, auto& v) { c.search.eps_fine = parse_real(k, v); }},
        {"search.stride_fine", [](R& c, auto& k, auto& v) { c.search.stride_fine = parse_real(k, v); }},
        {"n_fit", [](R& c, auto& k, auto& v) { c.n_fit = parse_uint(k, v); }},
        {"n_calibration", [](R& c, auto& k, auto& v) { c.n_calibration = parse_uint(k, v); }},
        {"n_eval", [](R& c, auto& k, auto& v) { c.n_eval = parse_uint(k, v); }},
        {"n_diagnose", [](R& c, auto& k, auto& v) { c.n_diagnose = parse_uint(k, v); }},
        {"noise_variance", [](R& c, auto& k, auto& v) { c.noise_variance = parse_real(k, v); }},
        {"seed", [](R& c, auto& k, auto& v) { c.seed = Seed{parse_uint(k, v)}; }},
        {"output_dir", [](R& c, auto&, auto& v) { c.output_dir = v; }},
    };
    return setters;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : detail::config_setters()) keys.push_back(k);
    return keys;
}

/// Unknown keys are errors, so a typo never silently falls back to a default.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    const auto& setters = detail::config_setters();
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("config: unknown key '" + key + "'");
    it->second(c, key, detail::trim(value));
}

/// '#' starts a comment; blank lines are skipped.
inline void apply_config_text(RunConfig& c, std::istream& is, const std::string& source = "config") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        set_config_value(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline void apply_config_file(RunConfig& c, const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open config file " + path.string());
    apply_config_text(c, is, path.string());
}

inline std::string env_name(const std::string& key) {
    std::string out = "RESCAL_";
    for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

/// getenv is injectable for tests.
inline void apply_env_overrides(RunConfig& c,
                                const std::function<const char*(const char*)>& getenv_fn = [](const char* n) {
                                    return std::getenv(n);
                                }) {
    for (const auto& key : config_keys()) {
        if (const char* v = getenv_fn(env_name(key).c_str())) set_config_value(c, key, v);
    }
}

/// Canonical text form; apply_config_text(to_config_text(c)) reproduces c.
inline std::string to_config_text(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "data.mean = " << c.data.mean << '\n'
       << "data.variance = " << c.data.variance << '\n'
       << "data.alpha = " << c.data.alpha << '\n'
       << "ref_resolution = " << c.ref_resolution << '\n'
       << "eval_resolutions = ";
    for (std::size_t i = 0; i < c.eval_resolutions.size(); ++i) os << (i ? "," : "") << c.eval_resolutions[i];
    os << '\n'
       << "schedule.kind = " << to_string(c.schedule.kind) << '\n'
       << "schedule.T = " << c.schedule.steps << '\n'
       << "schedule.shift = " << c.schedule.shift << '\n'
       << "search.eps_coarse = " << c.search.eps_coarse << '\n'
       << "search.stride_coarse = " << c.search.stride_coarse << '\n'
       << "search.eps_fine = " << c.search.eps_fine << '\n'
       << "search.stride_fine = " << c.search.stride_fine << '\n'
       << "n_fit = " << c.n_fit << '\n'
       << "n_calibration = " << c.n_calibration << '\n'
       << "n_eval = " << c.n_eval << '\n'
       << "n_diagnose = " << c.n_diagnose << '\n'
       << "noise_variance = " << c.noise_variance << '\n'
       << "seed = " << c.seed.value << '\n'
       << "output_dir = " << c.output_dir.string() << '\n';
    return os.str();
}

}  // namespace rescal
