#pragma once

// Temporal noise sensing and suppression for frame sequences:
//  - per-pixel Gaussian statistics of flow samples over time,
//  - Shapiro-Wilk survey of the Gaussian model,
//  - jitter/flicker variance from the regression-residual identity
//    var_noise = var_fake - cov^2(fake, real) / var_real,
//  - the per-pixel noise pattern D = sqrt(var_x + var_y),
//  - D-adaptive temporal Gaussian filtering.

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/parallel.hpp"
#include "talkstab/shapiro_wilk.hpp"
#include "talkstab/stats.hpp"

namespace talkstab {

// Below this, D is treated as zero and the temporal kernel degenerates to a
// delta (identity filter).
inline constexpr double kNoiseFloor = 1e-6;

// Pixels need at least this many paired flow samples before a noise estimate
// is trusted; fewer marks the pixel invalid.
inline constexpr int kDefaultMinSamples = 8;

struct PixelFlowStats {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double cov_xx = 0.0; // unbiased sample covariance entries
    double cov_xy = 0.0;
    double cov_yy = 0.0;
    int sample_count = 0;
};

struct PixelStatsGrid {
    int width = 0;
    int height = 0;
    std::vector<PixelFlowStats> stats;
    std::vector<uint8_t> valid;

    const PixelFlowStats& at(int x, int y) const {
        return stats[static_cast<size_t>(y) * width + x];
    }
    bool valid_at(int x, int y) const { return valid[static_cast<size_t>(y) * width + x] != 0; }
};

struct NormalityReport {
    int width = 0;
    int height = 0;
    std::vector<double> w_x, p_x; // per-pixel statistic and p-value, x component
    std::vector<double> w_y, p_y;
    std::vector<uint8_t> valid;                 // pixel tested successfully in both components
    std::map<double, double> gaussian_at;       // confidence level -> non-rejection fraction
    size_t tested_components = 0;
    size_t excluded_components = 0;
};

struct NoisePatternMap {
    int width = 0;
    int height = 0;
    std::vector<double> d;      // noise pattern, pixels/frame, >= 0 where valid
    std::vector<uint8_t> valid; // false where estimation was impossible

    double at(int x, int y) const { return d[static_cast<size_t>(y) * width + x]; }
    bool valid_at(int x, int y) const { return valid[static_cast<size_t>(y) * width + x] != 0; }
};

struct TemporalKernel {
    int half_width = 0;
    std::vector<double> weights; // 2K+1 entries, symmetric, sum 1

    double weight(int k) const { return weights[k + half_width]; }
};

struct LinearFit {
    double alpha = 0.0;
    double beta = 0.0;
};

struct NoiseVariance {
    double value = 0.0; // clamped to >= 0
    double raw = 0.0;   // pre-clamp value; only rounding can push it below 0
};

namespace detail {

struct PairedMoments {
    double mean_a = 0.0, mean_b = 0.0;
    double var_a = 0.0, var_b = 0.0, cov = 0.0; // unbiased
};

inline PairedMoments paired_moments(std::span<const double> a, std::span<const double> b) {
    const size_t n = a.size();
    PairedMoments m;
    for (size_t i = 0; i < n; ++i) {
        m.mean_a += a[i];
        m.mean_b += b[i];
    }
    m.mean_a /= static_cast<double>(n);
    m.mean_b /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - m.mean_a;
        const double db = b[i] - m.mean_b;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double denom = static_cast<double>(n - 1);
    m.var_a = saa / denom;
    m.var_b = sbb / denom;
    m.cov = sab / denom;
    return m;
}

} // namespace detail

// Per-pixel temporal mean and unbiased covariance of the flow samples.
inline PixelStatsGrid pixel_stats(const FlowSeries& series, const RegionMask& mask) {
    if (series.size() < 2) throw ValidationError("pixel_stats: series too short (need >= 2)");
    if (mask.width != series.width || mask.height != series.height)
        throw ValidationError("pixel_stats: mask dimension mismatch");

    const int w = series.width, h = series.height;
    const int n = static_cast<int>(series.size());
    PixelStatsGrid grid;
    grid.width = w;
    grid.height = h;
    grid.stats.resize(static_cast<size_t>(w) * h);
    grid.valid.assign(static_cast<size_t>(w) * h, 0);

    parallel_for(0, h, [&](int y) {
        std::vector<double> us(n), vs(n);
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            if (!mask.at(x, y)) continue;
            for (int t = 0; t < n; ++t) {
                us[t] = series.fields[t].u_at(x, y);
                vs[t] = series.fields[t].v_at(x, y);
            }
            const auto m = detail::paired_moments(us, vs);
            PixelFlowStats& s = grid.stats[idx];
            s.mean_x = m.mean_a;
            s.mean_y = m.mean_b;
            s.cov_xx = m.var_a;
            s.cov_yy = m.var_b;
            s.cov_xy = m.cov;
            s.sample_count = n;
            grid.valid[idx] = 1;
        }
    });
    return grid;
}

// Shapiro-Wilk per pixel and component; gaussian_at[c] is the fraction of
// valid component tests with p > 1 - c.
inline NormalityReport normality_survey(const FlowSeries& series, const RegionMask& mask,
                                        const std::vector<double>& levels) {
    if (mask.width != series.width || mask.height != series.height)
        throw ValidationError("normality_survey: mask dimension mismatch");
    const int n = static_cast<int>(series.size());
    if (n < 3 || n > 5000)
        throw ValidationError("normality_survey: per-pixel sample count must lie in [3, 5000]");
    if (mask.count() == 0) throw ValidationError("normality_survey: no pixels under test");
    for (double c : levels)
        if (!(c > 0.0 && c < 1.0))
            throw ValidationError("normality_survey: confidence levels must lie in (0, 1)");

    const int w = series.width, h = series.height;
    NormalityReport rep;
    rep.width = w;
    rep.height = h;
    const size_t cells = static_cast<size_t>(w) * h;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.w_x.assign(cells, nan);
    rep.p_x.assign(cells, nan);
    rep.w_y.assign(cells, nan);
    rep.p_y.assign(cells, nan);
    rep.valid.assign(cells, 0);

    parallel_for(0, h, [&](int y) {
        std::vector<double> comp(n);
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const size_t idx = static_cast<size_t>(y) * w + x;
            bool both_ok = true;
            for (int c = 0; c < 2; ++c) {
                for (int t = 0; t < n; ++t)
                    comp[t] = c == 0 ? series.fields[t].u_at(x, y) : series.fields[t].v_at(x, y);
                try {
                    const auto r = shapiro_wilk(comp);
                    if (c == 0) {
                        rep.w_x[idx] = r.w;
                        rep.p_x[idx] = r.p;
                    } else {
                        rep.w_y[idx] = r.w;
                        rep.p_y[idx] = r.p;
                    }
                } catch (const ValidationError&) {
                    both_ok = false; // zero-variance component; excluded
                }
            }
            rep.valid[idx] = both_ok ? 1 : 0;
        }
    });

    // Pixel-level exclusion: a zero-variance component invalidates the pixel,
    // removing both of its component tests from the fractions.
    size_t tested = 0, excluded = 0;
    std::vector<size_t> non_rejected(levels.size(), 0);
    for (size_t i = 0; i < cells; ++i) {
        if (!mask.member[i]) continue;
        if (!rep.valid[i]) {
            excluded += 2;
            continue;
        }
        for (const double* p : {&rep.p_x[i], &rep.p_y[i]}) {
            ++tested;
            for (size_t l = 0; l < levels.size(); ++l)
                if (*p > 1.0 - levels[l]) ++non_rejected[l];
        }
    }
    if (tested == 0) throw ValidationError("normality_survey: no pixels under test");
    for (size_t l = 0; l < levels.size(); ++l)
        rep.gaussian_at[levels[l]] = static_cast<double>(non_rejected[l]) / tested;
    rep.tested_components = tested;
    rep.excluded_components = excluded;
    return rep;
}

inline nlohmann::json normality_report_to_json(const NormalityReport& rep) {
    nlohmann::json j;
    auto levels = nlohmann::json::array();
    auto fractions = nlohmann::json::array();
    for (const auto& [level, fraction] : rep.gaussian_at) {
        levels.push_back(level);
        fractions.push_back(fraction);
    }
    j["levels"] = levels;
    j["fractions"] = fractions;
    double wx_sum = 0, wy_sum = 0;
    size_t nv = 0;
    for (size_t i = 0; i < rep.valid.size(); ++i) {
        if (!rep.valid[i]) continue;
        wx_sum += rep.w_x[i];
        wy_sum += rep.w_y[i];
        ++nv;
    }
    j["per_pixel_summary"] = {
        {"tested_components", rep.tested_components},
        {"excluded_components", rep.excluded_components},
        {"valid_pixels", nv},
        {"mean_w_x", nv ? wx_sum / nv : 0.0},
        {"mean_w_y", nv ? wy_sum / nv : 0.0},
    };
    return j;
}

// Closed-form minimizer of E[(target - (alpha * predictor + beta))^2] under
// sample statistics.
inline LinearFit linear_mmse_fit(std::span<const double> target,
                                 std::span<const double> predictor) {
    if (target.size() != predictor.size())
        throw ValidationError("linear_mmse_fit: length mismatch");
    if (target.size() < 2) throw ValidationError("linear_mmse_fit: need at least 2 samples");
    const auto m = detail::paired_moments(target, predictor);
    if (!(m.var_b > 0.0)) throw ValidationError("linear_mmse_fit: zero predictor variance");
    LinearFit fit;
    fit.alpha = m.cov / m.var_b;
    fit.beta = m.mean_a - fit.alpha * m.mean_b;
    return fit;
}

// Variance of the jitter/flicker noise left after the best linear explanation
// of the generated flow by the reference flow. Non-negative up to rounding
// by the Cauchy-Schwarz inequality.
inline NoiseVariance noise_variance(std::span<const double> fake, std::span<const double> real) {
    if (fake.size() != real.size()) throw ValidationError("noise_variance: length mismatch");
    if (fake.size() < 2) throw ValidationError("noise_variance: need at least 2 samples");
    const auto m = detail::paired_moments(fake, real);
    if (!(m.var_b > 0.0))
        throw ValidationError("noise_variance: reference flow constant; noise undefined");
    NoiseVariance r;
    // (var_f * var_r - cov^2) / var_r rather than var_f - cov^2 / var_r: the
    // self-comparison fake == real then cancels to exactly zero.
    r.raw = (m.var_a * m.var_b - m.cov * m.cov) / m.var_b;
    r.value = r.raw > 0.0 ? r.raw : 0.0;
    return r;
}

// Per-pixel noise pattern D = sqrt(var_noise_x + var_noise_y) from aligned
// generated/reference flow series.
inline NoisePatternMap noise_pattern(const FlowSeries& fake_series, const FlowSeries& real_series,
                                     const RegionMask& mask,
                                     int min_samples = kDefaultMinSamples) {
    if (fake_series.width != real_series.width || fake_series.height != real_series.height)
        throw ValidationError("noise_pattern: series dimension mismatch");
    if (fake_series.size() != real_series.size())
        throw ValidationError("noise_pattern: series length mismatch");
    if (mask.width != fake_series.width || mask.height != fake_series.height)
        throw ValidationError("noise_pattern: mask dimension mismatch");
    if (fake_series.size() < 2) throw ValidationError("noise_pattern: series too short (need >= 2)");
    if (mask.count() == 0) throw ValidationError("noise_pattern: empty mask");

    const int w = fake_series.width, h = fake_series.height;
    const int n = static_cast<int>(fake_series.size());
    NoisePatternMap map;
    map.width = w;
    map.height = h;
    map.d.assign(static_cast<size_t>(w) * h, 0.0);
    map.valid.assign(static_cast<size_t>(w) * h, 0);
    if (n < min_samples) return map; // too few samples anywhere: all invalid

    parallel_for(0, h, [&](int y) {
        std::vector<double> f(n), r(n);
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const size_t idx = static_cast<size_t>(y) * w + x;
            double total = 0.0;
            bool ok = true;
            for (int c = 0; c < 2 && ok; ++c) {
                for (int t = 0; t < n; ++t) {
                    f[t] = c == 0 ? fake_series.fields[t].u_at(x, y)
                                  : fake_series.fields[t].v_at(x, y);
                    r[t] = c == 0 ? real_series.fields[t].u_at(x, y)
                                  : real_series.fields[t].v_at(x, y);
                }
                const auto m = detail::paired_moments(f, r);
                if (!(m.var_b > 0.0)) {
                    ok = false; // static reference gives no evidence about noise
                    break;
                }
                const double raw = (m.var_a * m.var_b - m.cov * m.cov) / m.var_b;
                total += raw > 0.0 ? raw : 0.0;
            }
            if (ok) {
                map.d[idx] = std::sqrt(total);
                map.valid[idx] = 1;
            }
        }
    });
    return map;
}

// Softmax of -k^2 / (2 D^2) over k in {-K..K}; the delta kernel for D below
// the noise floor.
inline TemporalKernel build_kernel(double d, int half_width) {
    if (!(d >= 0.0)) throw ValidationError("build_kernel: D must be >= 0");
    if (half_width < 0) throw ValidationError("build_kernel: half width must be >= 0");
    TemporalKernel kernel;
    kernel.half_width = half_width;
    kernel.weights.assign(2 * static_cast<size_t>(half_width) + 1, 0.0);
    if (d <= kNoiseFloor) {
        kernel.weights[half_width] = 1.0;
        return kernel;
    }
    double sum = 0.0;
    for (int k = 0; k <= half_width; ++k) {
        const double e = std::exp(-(static_cast<double>(k) * k) / (2.0 * d * d));
        kernel.weights[half_width + k] = e;
        kernel.weights[half_width - k] = e; // symmetric by construction
        sum += (k == 0) ? e : 2.0 * e;
    }
    for (double& w : kernel.weights) w /= sum;
    return kernel;
}

// Spatially adaptive temporal filter: each masked valid pixel is smoothed
// along time with its own D-derived Gaussian kernel (replicate padding at the
// sequence boundaries), then re-quantized to the 8-bit grid. Everything else
// passes through bit-exact.
inline FrameSequence stabilize(const FrameSequence& seq, const NoisePatternMap& pattern,
                               int half_width, const RegionMask& mask) {
    if (seq.empty()) throw ValidationError("stabilize: empty sequence");
    if (pattern.width != seq.width || pattern.height != seq.height)
        throw ValidationError("stabilize: pattern dimension mismatch");
    if (mask.width != seq.width || mask.height != seq.height)
        throw ValidationError("stabilize: mask dimension mismatch");
    if (half_width < 0) throw ValidationError("stabilize: half width must be >= 0");

    FrameSequence out = seq; // pass-through baseline
    const int w = seq.width, h = seq.height, ch = seq.channels;
    const int n = static_cast<int>(seq.size());

    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || !pattern.valid_at(x, y)) continue;
            const double d = pattern.at(x, y);
            if (d <= kNoiseFloor) continue; // delta kernel: identity
            const TemporalKernel kernel = build_kernel(d, half_width);
            for (int c = 0; c < ch; ++c) {
                for (int t = 0; t < n; ++t) {
                    double acc = 0.0;
                    for (int k = -half_width; k <= half_width; ++k) {
                        int tk = t + k;
                        if (tk < 0) tk = 0;
                        if (tk >= n) tk = n - 1;
                        acc += kernel.weight(k) * seq.frames[tk].at(x, y, c);
                    }
                    out.frames[t].at(x, y, c) = quantize_u8(acc) / 255.0;
                }
            }
        }
    });
    return out;
}

inline double mean_noise_pattern(const NoisePatternMap& pattern, const RegionMask& mask) {
    if (mask.width != pattern.width || mask.height != pattern.height)
        throw ValidationError("mean_noise_pattern: mask dimension mismatch");
    double sum = 0.0;
    size_t count = 0;
    for (int y = 0; y < pattern.height; ++y)
        for (int x = 0; x < pattern.width; ++x)
            if (mask.at(x, y) && pattern.valid_at(x, y)) {
                sum += pattern.at(x, y);
                ++count;
            }
    if (count == 0) throw ValidationError("mean_noise_pattern: empty selection");
    return sum / static_cast<double>(count);
}

// Noise-pattern maps persist through the .flo container with v = 0; invalid
// pixels are written as D = 0, which filters identically (delta kernel).
inline FlowField pattern_to_flow(const NoisePatternMap& pattern) {
    FlowField f = make_flow(pattern.width, pattern.height);
    for (size_t i = 0; i < pattern.d.size(); ++i)
        f.u[i] = pattern.valid[i] ? static_cast<float>(pattern.d[i]) : 0.f;
    return f;
}

inline NoisePatternMap pattern_from_flow(const FlowField& field) {
    NoisePatternMap map;
    map.width = field.width;
    map.height = field.height;
    map.d.resize(field.u.size());
    map.valid.assign(field.u.size(), 1);
    for (size_t i = 0; i < field.u.size(); ++i) {
        const double d = field.u[i];
        if (!(d >= 0.0)) throw ValidationError("noise pattern map: negative D entry");
        map.d[i] = d;
    }
    return map;
}

} // namespace talkstab
