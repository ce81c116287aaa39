// SPDX-License-Identifier: Apache-2.0
#pragma once

// Measurement apparatus: one-step forward/reverse MSE curves, SSIM against
// forward noise per resolution, and a closed-form Gaussian Frechet distance
// over radially binned spectra standing in for FID.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rescal/calibrate.hpp"
#include "rescal/error.hpp"
#include "rescal/grid.hpp"
#include "rescal/model.hpp"
#include "rescal/sampler.hpp"
#include "rescal/schedule.hpp"
#include "rescal/table.hpp"

namespace rescal {

struct Curve {
    std::vector<double> xs;
    std::vector<double> ys;
    std::string label;

    void validate() const {
        if (xs.size() != ys.size()) throw ValidationError("curve '" + label + "': xs and ys differ in length");
        for (std::size_t i = 1; i < xs.size(); ++i) {
            if (!(xs[i] > xs[i - 1])) throw ValidationError("curve '" + label + "': xs not strictly increasing");
        }
    }
};

/// ys[t] = one-step reverse loss at the nominal conditioning, t = 0..T-1.
inline Curve reverse_mse_curve(const Denoiser& d, std::span<const Field> x0s, const SigmaSchedule& schedule,
                               Seed seed, std::string label = {}) {
    Curve c;
    c.label = std::move(label);
    for (std::size_t t = 0; t < schedule.steps(); ++t) {
        const OneStepObjective objective(d, x0s, schedule, t, seed);
        c.xs.push_back(static_cast<double>(t));
        c.ys.push_back(objective(objective.nominal()));
    }
    return c;
}

// --- SSIM -------------------------------------------------------------------

inline constexpr std::size_t kSsimWindow = 8;

/// Mean SSIM over all 8x8 windows (stride 1, uniform weights) with
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2.
inline double ssim(const Field& a, const Field& b, double dynamic_range) {
    if (!a.same_shape(b)) throw SizeError("ssim: dimension mismatch");
    if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
        throw SizeError("ssim: field smaller than the 8x8 window");
    }
    if (!(dynamic_range > 0.0)) throw DomainError("ssim: dynamic range must be > 0");
    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    const double inv = 1.0 / static_cast<double>(kSsimWindow * kSsimWindow);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t y0 = 0; y0 + kSsimWindow <= a.height(); ++y0) {
        for (std::size_t x0 = 0; x0 + kSsimWindow <= a.width(); ++x0) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t y = y0; y < y0 + kSsimWindow; ++y) {
                for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
                    const double va = a(x, y);
                    const double vb = b(x, y);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            const double ma = sa * inv, mb = sb * inv;
            const double va = saa * inv - ma * ma;
            const double vb = sbb * inv - mb * mb;
            const double cov = sab * inv - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

/// Dynamic range taken as 6 standard deviations of the wider of the two
/// fields (1 for two constant fields), which keeps the index symmetric.
inline double ssim(const Field& a, const Field& b) {
    const double sd = std::sqrt(std::max(field_stats(a).variance, field_stats(b).variance));
    return ssim(a, b, sd > 0.0 ? 6.0 * sd : 1.0);
}

/// SSIM(x0, add_noise(x0, sigma)) averaged over n draws, one curve per
/// resolution. Every resolution sees the same underlying realization, drawn
/// at the largest resolution and box-downsampled; the dynamic range is
/// 6 std of the clean field.
inline std::vector<Curve> ssim_noise_curve(const DataSpec& spec, std::span<const std::size_t> resolutions,
                                           std::span<const double> sigma_grid, std::size_t n, Seed seed) {
    if (resolutions.empty()) throw DomainError("ssim_noise_curve: no resolutions");
    if (n == 0) throw DomainError("ssim_noise_curve: n must be >= 1");
    for (double s : sigma_grid) {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("ssim_noise_curve: sigma outside [0, 1]");
    }
    const std::size_t top = *std::max_element(resolutions.begin(), resolutions.end());
    std::vector<Curve> curves(resolutions.size());
    for (std::size_t r = 0; r < resolutions.size(); ++r) {
        if (resolutions[r] == 0 || top % resolutions[r] != 0) throw SizeError("ssim_noise_curve: bad resolution");
        curves[r].label = std::to_string(resolutions[r]) + "x" + std::to_string(resolutions[r]);
        curves[r].xs.assign(sigma_grid.begin(), sigma_grid.end());
        curves[r].ys.assign(sigma_grid.size(), 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Field base = grf_sample(spec, top, top, derive_seed(seed, 0, i));
        for (std::size_t r = 0; r < resolutions.size(); ++r) {
            const Field x0 = box_downsample(base, top / resolutions[r]);
            const double range = 6.0 * std::sqrt(field_stats(x0).variance);
            for (std::size_t s = 0; s < sigma_grid.size(); ++s) {
                const Field noisy = add_noise(x0, sigma_grid[s], derive_seed(seed, 1 + r, i * sigma_grid.size() + s));
                curves[r].ys[s] += ssim(x0, noisy, range > 0.0 ? range : 1.0);
            }
        }
    }
    for (auto& c : curves) {
        for (double& y : c.ys) y /= static_cast<double>(n);
    }
    return curves;
}

// --- Gaussian Frechet distance ----------------------------------------------

/// Pooled mean plus, per radial bin b = round(|k|) in 0..min(w,h)/2 (corner
/// bins fold into the last one), the across-field variance of the Fourier
/// coefficients scaled by 1/N^2, so the bins sum to the per-pixel variance.
struct GaussianStats {
    double mean = 0.0;
    std::vector<double> variances;
};

inline GaussianStats gaussian_stats(std::span<const Field> fields) {
    if (fields.size() < 2) throw DomainError("gaussian_stats: need at least 2 fields");
    detail::require_uniform(fields, "gaussian_stats");
    const std::size_t w = fields.front().width();
    const std::size_t h = fields.front().height();
    const std::size_t last = std::min(w, h) / 2;
    const double n_pix = static_cast<double>(w * h);
    const double m = static_cast<double>(fields.size());

    std::vector<Spectrum> spectra;
    spectra.reserve(fields.size());
    for (const auto& f : fields) spectra.push_back(fft2(f));

    GaussianStats st;
    st.variances.assign(last + 1, 0.0);
    double pooled = 0.0;
    for (const auto& f : fields) pooled += field_stats(f).mean;
    st.mean = pooled / m;
    for (std::size_t ky = 0; ky < h; ++ky) {
        for (std::size_t kx = 0; kx < w; ++kx) {
            const std::size_t idx = ky * w + kx;
            Complex mu{0.0, 0.0};
            for (const auto& s : spectra) mu += s.bins[idx];
            mu /= m;
            double ss = 0.0;
            for (const auto& s : spectra) ss += std::norm(s.bins[idx] - mu);
            const std::size_t b = std::min(radial_bin(kx, ky, w, h), last);
            st.variances[b] += ss / (m - 1.0) / (n_pix * n_pix);
        }
    }
    return st;
}

/// sqrt((mu_a - mu_b)^2 + sum_b (sqrt(v_a) - sqrt(v_b))^2): the 2-Wasserstein
/// distance between diagonal Gaussians.
inline double gaussian_frechet(const GaussianStats& a, const GaussianStats& b) {
    if (a.variances.size() != b.variances.size()) throw SizeError("gaussian_frechet: bin count mismatch");
    double acc = (a.mean - b.mean) * (a.mean - b.mean);
    for (std::size_t i = 0; i < a.variances.size(); ++i) {
        if (a.variances[i] < 0.0 || b.variances[i] < 0.0) throw DomainError("gaussian_frechet: negative variance");
        const double d = std::sqrt(a.variances[i]) - std::sqrt(b.variances[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// n GRF reference draws at the given resolution.
inline std::vector<Field> reference_batch(const DataSpec& spec, std::size_t width, std::size_t height, std::size_t n,
                                          Seed seed) {
    std::vector<Field> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(grf_sample(spec, width, height, derive_seed(seed, i)));
    return out;
}

inline std::vector<Field> generate_batch(const Denoiser& d, const SigmaSchedule& schedule,
                                         const CalibrationTable* table, std::size_t width, std::size_t height,
                                         std::size_t n, Seed seed) {
    std::vector<Field> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample(d, schedule, table, width, height, derive_seed(seed, i)));
    return out;
}

struct EvalReport {
    double fd = 0.0;
    bool calibrated = false;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t n = 0;
    Seed seed{};
};

/// FD between n generated samples and n reference draws. Generated samples
/// use derive_seed(seed, 2) and references derive_seed(seed, 1), so runs with
/// and without a table share both the initial noise and the references.
inline EvalReport eval_generation(const Denoiser& d, const SigmaSchedule& schedule, const CalibrationTable* table,
                                  const DataSpec& spec, std::size_t width, std::size_t height, std::size_t n,
                                  Seed seed) {
    if (n < 16) throw DomainError("eval_generation: n must be >= 16");
    const auto reference = reference_batch(spec, width, height, n, derive_seed(seed, 1));
    const auto generated = generate_batch(d, schedule, table, width, height, n, derive_seed(seed, 2));
    EvalReport r;
    r.fd = gaussian_frechet(gaussian_stats(generated), gaussian_stats(reference));
    r.calibrated = table != nullptr;
    r.width = width;
    r.height = height;
    r.n = n;
    r.seed = seed;
    return r;
}

// --- CSV / SVG --------------------------------------------------------------

/// Header "x,y,label", one row per point, 17 significant digits.
inline void write_curves_csv(std::ostream& os, std::span<const Curve> curves) {
    os << "x,y,label\n" << std::setprecision(17);
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.xs.size(); ++i) os << c.xs[i] << ',' << c.ys[i] << ',' << c.label << '\n';
    }
}

/// Inverse of write_curves_csv; rows are grouped by label in first-seen order.
inline std::vector<Curve> read_curves_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "x,y,label") throw ParseError("curves csv: bad header");
    std::vector<Curve> curves;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto p1 = line.find(',');
        const auto p2 = line.find(',', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos) throw ParseError("curves csv: bad row '" + line + "'");
        const std::string label = line.substr(p2 + 1);
        auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.label == label; });
        if (it == curves.end()) {
            curves.push_back({{}, {}, label});
            it = std::prev(curves.end());
        }
        try {
            it->xs.push_back(std::stod(line.substr(0, p1)));
            it->ys.push_back(std::stod(line.substr(p1 + 1, p2 - p1 - 1)));
        } catch (const std::exception&) {
            throw ParseError("curves csv: bad number in '" + line + "'");
        }
    }
    return curves;
}

/// Line plot on a fixed 800x600 viewBox, one polyline per curve, linear axes
/// autoscaled to the data. Presentation only.
inline void write_curves_svg(std::ostream& os, std::span<const Curve> curves, const std::string& title) {
    constexpr double kW = 800, kH = 600, kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            xmin = std::min(xmin, c.xs[i]);
            xmax = std::max(xmax, c.xs[i]);
            ymin = std::min(ymin, c.ys[i]);
            ymax = std::max(ymax, c.ys[i]);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
    os << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    os << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << title
       << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        os << "<text x=\"" << px(fx) << "\" y=\"" << kH - kBottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fx << "</text>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(fy) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fy << "</text>\n";
    }
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const char* color = kColors[ci % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < curves[ci].xs.size(); ++i) {
            os << px(curves[ci].xs[i]) << ',' << py(curves[ci].ys[i]) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << kW - kRight + 12 << "\" y=\"" << kTop + 16 + 18 * static_cast<double>(ci)
           << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << curves[ci].label
           << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace rescal
