// SPDX-License-Identifier: Apache-2.0
//
// rescal: fit / calibrate / sample / diagnose / report.
//
// Output layout under --out (default from config):
//   params/model.json
//   tables/<schedule kind>/<W>x<H>.json
//   samples/<schedule kind>/<W>x<H>/{default,calibrated}/sample_NNNN.bin + index.json
//   reports/*.csv, reports/*.svg, reports/summary.txt
//   metadata.json   (the only file carrying timestamps)
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 invalid artifact,
// 4 non-finite number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rescal/calibrate.hpp"
#include "rescal/config.hpp"
#include "rescal/diagnostics.hpp"
#include "rescal/io.hpp"
#include "rescal/model.hpp"
#include "rescal/sampler.hpp"

namespace fs = std::filesystem;
using namespace rescal;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfigError = 2, kArtifactError = 3, kNumericalError = 4 };

// Distinguishes config problems from artifact problems, which share
// exception types.
struct ConfigFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArtifactFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Seed streams, one per purpose.
enum Stream : std::uint64_t {
    kFitData = 1,
    kFitNoise = 2,
    kCalibrationData = 3,
    kCalibrationNoise = 4,
    kSampleNoise = 5,
    kSsim = 6,
    kMseData = 7,
    kMseNoise = 8,
    kEval = 9,
};

class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f) throw std::runtime_error("output directory " + dir.string() + " is locked (" + path_.string() + ")");
        std::fclose(f);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_metadata(const RunConfig& cfg, const std::string& command, const std::string& started) {
    const fs::path path = cfg.output_dir / "metadata.json";
    Json j = Json::object();
    if (fs::exists(path)) {
        try {
            j = detail::parse_file(path);
        } catch (const ParseError&) {
            j = Json::object();
        }
    }
    j["commands"][command] = {{"started", started}, {"finished", utc_now()}, {"seed", cfg.seed.value}};
    detail::write_file(path, j);
}

template <class F>
auto load_artifact(F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ArtifactFailure(e.what());
    } catch (const ValidationError& e) {
        throw ArtifactFailure(e.what());
    }
}

ModelFile load_model_file(const RunConfig& cfg) {
    const fs::path path = cfg.output_dir / "params" / "model.json";
    if (!fs::exists(path)) throw std::runtime_error(path.string() + " not found; run 'fit' first");
    return load_artifact([&] { return load_model(path); });
}

CalibrationTable load_table_file(const RunConfig& cfg, std::size_t r) {
    const fs::path path = table_path(cfg.output_dir, to_string(cfg.schedule.kind), r, r);
    if (!fs::exists(path)) throw std::runtime_error(path.string() + " not found; run 'calibrate' first");
    auto t = load_artifact([&] { return load_table(path); });
    if (t.steps != cfg.schedule.steps || t.schedule_kind != to_string(cfg.schedule.kind)) {
        throw ArtifactFailure(path.string() + " was produced for a different schedule");
    }
    return t;
}

std::vector<Field> data_batch(const RunConfig& cfg, std::size_t r, std::size_t n, Stream stream) {
    return reference_batch(cfg.data, r, r, n, derive_seed(cfg.seed, stream, r));
}

void save_curves(const fs::path& dir, const std::string& name, const std::vector<Curve>& curves,
                 const std::string& title) {
    fs::create_directories(dir);
    std::ofstream csv(dir / (name + ".csv"));
    write_curves_csv(csv, curves);
    std::ofstream svg(dir / (name + ".svg"));
    write_curves_svg(svg, curves, title);
    if (!csv || !svg) throw std::runtime_error("cannot write " + (dir / name).string());
}

// --- commands ----------------------------------------------------------------

int cmd_fit(const RunConfig& cfg) {
    const std::size_t r = cfg.ref_resolution;
    const auto data = data_batch(cfg, r, cfg.n_fit, kFitData);
    FitOptions opt;
    opt.schedule_steps = cfg.schedule.steps;
    const FitResult fit = fit_spectrum(data, cfg.noise_variance, derive_seed(cfg.seed, kFitNoise), opt);
    const ModelFile model{fit.params, cfg.noise_variance, r, r};
    save_model(model, cfg.output_dir / "params" / "model.json");
    std::cout << std::setprecision(6) << "fit " << r << "x" << r << ": mean=" << fit.params.mean
              << " amplitude=" << fit.params.amplitude << " alpha=" << fit.params.alpha << " loss=" << fit.loss
              << '\n';
    return kOk;
}

int cmd_calibrate(const RunConfig& cfg) {
    const ModelFile model = load_model_file(cfg);
    const Denoiser d = model.frozen();
    for (const auto r : cfg.eval_resolutions) {
        const SigmaSchedule schedule = cfg.schedule_for(r);
        const auto data = data_batch(cfg, r, cfg.n_calibration, kCalibrationData);
        const CalibrationTable table =
            calibrate_schedule(d, data, schedule, cfg.search, derive_seed(cfg.seed, kCalibrationNoise, r));
        save_table(table, table_path(cfg.output_dir, table.schedule_kind, r, r));
        double deviation = 0.0, improvement = 0.0;
        for (std::size_t t = 0; t < table.steps; ++t) {
            deviation += std::abs(table.sigmas_hat[t] - nominal_conditioning(schedule, t));
            improvement += table.default_losses[t] - table.losses[t];
        }
        std::cout << std::setprecision(6) << "calibrate " << r << "x" << r
                  << ": mean |sigma_hat - default| = " << deviation / static_cast<double>(table.steps)
                  << ", total loss improvement = " << improvement
                  << ", empty ranges = " << table.empty_range_steps.size() << '\n';
    }
    return kOk;
}

struct SampleOptions {
    std::optional<std::size_t> resolution;
    bool no_table = false;
    std::size_t n = 16;
};

int cmd_sample(const RunConfig& cfg, const SampleOptions& so) {
    const ModelFile model = load_model_file(cfg);
    const Denoiser d = model.frozen();
    std::vector<std::size_t> resolutions = cfg.eval_resolutions;
    if (so.resolution) resolutions = {*so.resolution};
    for (const auto r : resolutions) {
        if (r < 2 || !is_power_of_two(r)) throw ConfigFailure("--resolution must be a power of two >= 2");
        const SigmaSchedule schedule = cfg.schedule_for(r);
        std::optional<CalibrationTable> table;
        if (!so.no_table) table = load_table_file(cfg, r);
        const fs::path dir = cfg.output_dir / "samples" / to_string(cfg.schedule.kind) /
                             (std::to_string(r) + "x" + std::to_string(r)) / (table ? "calibrated" : "default");
        fs::create_directories(dir);
        const auto fields = generate_batch(d, schedule, table ? &*table : nullptr, r, r, so.n,
                                           derive_seed(cfg.seed, kSampleNoise, r));
        Json index = {{"width", r},
                      {"height", r},
                      {"calibrated", table.has_value()},
                      {"seed", cfg.seed.value},
                      {"schedule", schedule_to_json(schedule)},
                      {"files", Json::array()}};
        char name[32];
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::snprintf(name, sizeof name, "sample_%04zu.bin", i);
            save_field(dir / name, fields[i]);
            index["files"].push_back(name);
        }
        detail::write_file(dir / "index.json", index);
        std::cout << "sample " << r << "x" << r << ": " << fields.size() << " fields -> " << dir.string() << '\n';
    }
    return kOk;
}

// Noise levels for the SSIM curves.
std::vector<double> ssim_sigmas() {
    std::vector<double> s;
    for (int i = 1; i <= 19; ++i) s.push_back(0.05 * i);
    return s;
}

int cmd_diagnose(const RunConfig& cfg) {
    const ModelFile model = load_model_file(cfg);
    const Denoiser frozen = model.frozen();
    const Denoiser oracle = Denoiser::oracle(cfg.data, cfg.noise_variance);
    const fs::path dir = cfg.output_dir / "reports";

    std::vector<std::size_t> ssim_res;
    for (auto r : cfg.eval_resolutions) {
        if (r >= kSsimWindow && cfg.ref_resolution % r == 0) ssim_res.push_back(r);
    }
    if (std::find(ssim_res.begin(), ssim_res.end(), cfg.ref_resolution) == ssim_res.end()) {
        ssim_res.push_back(cfg.ref_resolution);
    }
    const auto sigmas = ssim_sigmas();
    save_curves(dir, "ssim_curves",
                ssim_noise_curve(cfg.data, ssim_res, sigmas, cfg.n_diagnose, derive_seed(cfg.seed, kSsim)),
                "SSIM(x0, x_sigma) vs sigma");

    std::vector<Curve> mse, sigma_hat;
    std::ostringstream fd;
    fd << "resolution,fd_default,fd_calibrated,relative_improvement\n" << std::setprecision(17);
    for (const auto r : cfg.eval_resolutions) {
        const std::string tag = std::to_string(r) + "x" + std::to_string(r);
        const SigmaSchedule schedule = cfg.schedule_for(r);
        const auto data = data_batch(cfg, r, cfg.n_diagnose, kMseData);
        const Seed noise = derive_seed(cfg.seed, kMseNoise, r);
        mse.push_back(reverse_mse_curve(frozen, data, schedule, noise, "frozen " + tag));
        mse.push_back(reverse_mse_curve(oracle, data, schedule, noise, "oracle " + tag));

        const CalibrationTable table = load_table_file(cfg, r);
        Curve def{{}, {}, "default " + tag}, cal{{}, {}, "calibrated " + tag};
        for (std::size_t t = 0; t < schedule.steps(); ++t) {
            def.xs.push_back(static_cast<double>(t));
            def.ys.push_back(nominal_conditioning(schedule, t));
            cal.xs.push_back(static_cast<double>(t));
            cal.ys.push_back(table.sigmas_hat[t]);
        }
        sigma_hat.push_back(std::move(def));
        sigma_hat.push_back(std::move(cal));

        const Seed eval = derive_seed(cfg.seed, kEval, r);
        const double fd_default = eval_generation(frozen, schedule, nullptr, cfg.data, r, r, cfg.n_eval, eval).fd;
        const double fd_cal = eval_generation(frozen, schedule, &table, cfg.data, r, r, cfg.n_eval, eval).fd;
        fd << r << ',' << fd_default << ',' << fd_cal << ',' << (fd_default - fd_cal) / fd_default << '\n';
    }
    save_curves(dir, "reverse_mse", mse, "one-step reverse MSE vs t");
    save_curves(dir, "sigma_hat_vs_default", sigma_hat, "conditioning level vs t");
    std::ofstream(dir / "fd_report.csv") << fd.str();

    std::istringstream rows(fd.str());
    std::string line;
    std::getline(rows, line);
    Curve fd_def{{}, {}, "default"}, fd_cal{{}, {}, "calibrated"};
    while (std::getline(rows, line)) {
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        fd_def.xs.push_back(std::log2(std::stod(a)));
        fd_def.ys.push_back(std::stod(b));
        fd_cal.xs.push_back(std::log2(std::stod(a)));
        fd_cal.ys.push_back(std::stod(c));
    }
    std::ofstream svg(dir / "fd_report.svg");
    write_curves_svg(svg, std::vector<Curve>{fd_def, fd_cal}, "FD vs log2(resolution)");
    std::cout << "diagnose: reports written to " << dir.string() << '\n';
    return kOk;
}

int cmd_report(const RunConfig& cfg) {
    const fs::path dir = cfg.output_dir / "reports";
    const fs::path fd_path = dir / "fd_report.csv";
    if (!fs::exists(fd_path)) throw std::runtime_error(fd_path.string() + " not found; run 'diagnose' first");
    std::ostringstream out;
    char row[160];
    std::snprintf(row, sizeof row, "%10s  %12s  %13s  %11s  %17s  %9s\n", "resolution", "fd_default", "fd_calibrated",
                  "improvement", "sigma_hat>default", "mean|dev|");
    out << row;
    std::ifstream fd(fd_path);
    std::string line;
    std::getline(fd, line);
    while (std::getline(fd, line)) {
        std::istringstream ls(line);
        std::string r, a, b, c;
        std::getline(ls, r, ',');
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        const std::size_t res = std::stoul(r);
        const auto table = load_table_file(cfg, res);
        const SigmaSchedule schedule = cfg.schedule_for(res);
        std::size_t up = 0;
        double dev = 0.0;
        for (std::size_t t = 0; t < table.steps; ++t) {
            const double nominal = nominal_conditioning(schedule, t);
            up += table.sigmas_hat[t] > nominal ? 1 : 0;
            dev += std::abs(table.sigmas_hat[t] - nominal);
        }
        const std::string up_text = std::to_string(up) + "/" + std::to_string(table.steps);
        std::snprintf(row, sizeof row, "%10s  %12.6f  %13.6f  %+10.1f%%  %17s  %9.5f\n", (r + "x" + r).c_str(),
                      std::stod(a), std::stod(b), 100.0 * std::stod(c), up_text.c_str(),
                      dev / static_cast<double>(table.steps));
        out << row;
    }
    std::cout << out.str();
    std::ofstream(dir / "summary.txt") << out.str();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resolution-aware calibration of the conditioning noise level for a flow-matching sampler"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output directory");

    auto* fit = app.add_subcommand("fit", "fit the spectral model at the reference resolution");
    auto* calibrate = app.add_subcommand("calibrate", "calibrate conditioning levels per eval resolution");
    auto* sample = app.add_subcommand("sample", "draw samples with or without the calibration table");
    auto* diagnose = app.add_subcommand("diagnose", "write SSIM, reverse-MSE, sigma-hat and FD reports");
    auto* report = app.add_subcommand("report", "print a summary of the diagnose outputs");
    for (auto* sub : {fit, calibrate, sample, diagnose, report}) sub->fallthrough();

    SampleOptions so;
    std::size_t resolution = 0;
    sample->add_option("--resolution", resolution, "square resolution (default: every eval resolution)");
    sample->add_flag("--no-table", so.no_table, "use the default conditioning");
    sample->add_option("-n", so.n, "number of samples")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }
    if (sample->count("--resolution") > 0) so.resolution = resolution;

    RunConfig cfg;
    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        apply_env_overrides(cfg);
        if (seed) cfg.seed = Seed{*seed};
        if (out) cfg.output_dir = *out;
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        OutputLock lock(cfg.output_dir);
        const std::string started = utc_now();
        int rc = kOk;
        if (command == "fit") rc = cmd_fit(cfg);
        if (command == "calibrate") rc = cmd_calibrate(cfg);
        if (command == "sample") rc = cmd_sample(cfg, so);
        if (command == "diagnose") rc = cmd_diagnose(cfg);
        if (command == "report") rc = cmd_report(cfg);
        write_metadata(cfg, command, started);
        return rc;
    } catch (const ConfigFailure& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ArtifactFailure& e) {
        std::cerr << "invalid artifact: " << e.what() << '\n';
        return kArtifactError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << command << " failed: " << e.what() << '\n';
        return kFailure;
    }
}
