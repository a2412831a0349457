#pragma once

// Synthetic ground-truth assets for tests and calibration: translated and
// oscillating textured clips, flicker-corrupted copies with known injected
// noise, sampled Gaussian flow-series pairs, a parametric mouth model whose
// first shape basis opens the lips linearly, and blur ladders for sharpness
// ordering. Generation is driven by the counter-based RNG in rng.hpp, so a
// (seed, spec) pair reproduces byte-identical assets on any platform.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/flow_io.hpp"
#include "talkstab/image_io.hpp"
#include "talkstab/lip_geometry.hpp"
#include "talkstab/morphable.hpp"
#include "talkstab/rng.hpp"

namespace talkstab {

struct FixtureSpec {
    std::string kind; // translation | flicker | mouth_model | gaussian_flow | blur_ladder
    uint64_t seed = 1;

    // raster geometry
    int width = 64;
    int height = 48;
    int frames = 4;

    // translation
    double dx = 1.0;
    double dy = 0.0;

    // flicker: sinusoidal subpixel motion plus per-pixel intensity noise and
    // an aligned flow-series pair with injected flow-level noise
    double intensity_sigma = 0.08;
    double motion_amplitude = 1.2;
    double motion_period = 6.0;
    double flow_noise_sigma = 0.1; // std of injected flow noise per component

    // gaussian_flow
    double mu_x = 0.5;
    double mu_y = -0.2;
    double cov_xx = 0.04;
    double cov_xy = 0.01;
    double cov_yy = 0.09;
    double noise_variance_per_component = 0.01;

    // mouth_model
    int model_vertices = 14;
    int model_bases = 4;
    std::vector<double> alpha_grid = {0.0, 0.5, 1.0};

    // blur_ladder
    std::vector<double> blur_sigmas = {0.0, 1.0, 2.0, 4.0};
};

namespace fixture_detail {

inline void quantize_frame(Raster& r) {
    for (double& v : r.data) v = quantize_u8(v) / 255.0;
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Band-limited noise texture normalized to [lo, hi]: white noise smoothed by
// repeated 5-tap binomial passes.
inline Raster make_texture(CounterRng& rng, int w, int h, int smooth_passes, double lo,
                           double hi) {
    Raster r = make_raster(w, h, 1);
    for (double& v : r.data) v = rng.next_double();
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    auto clamped = [&](const std::vector<double>& d, int x, int y) {
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return d[static_cast<size_t>(y) * w + x];
    };
    for (int pass = 0; pass < smooth_passes; ++pass) {
        std::vector<double> tmp(r.data.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0;
                for (int t = -2; t <= 2; ++t) s += k[t + 2] * clamped(r.data, x + t, y);
                tmp[static_cast<size_t>(y) * w + x] = s;
            }
        std::vector<double> out(r.data.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0;
                for (int t = -2; t <= 2; ++t) s += k[t + 2] * clamped(tmp, x, y + t);
                out[static_cast<size_t>(y) * w + x] = s;
            }
        r.data = std::move(out);
    }
    double mn = r.data[0], mx = r.data[0];
    for (double v : r.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double span = mx > mn ? mx - mn : 1.0;
    for (double& v : r.data) v = lo + (hi - lo) * (v - mn) / span;
    return r;
}

inline Raster gaussian_blur(const Raster& src, double sigma);

// Edge-rich card: mid-gray texture overlaid with rectangles at a spread of
// contrasts and pre-blur levels, so edge-width statistics degrade gradually
// under further blurring instead of collapsing at one threshold.
inline Raster make_test_card(CounterRng& rng, int w, int h) {
    Raster base = make_texture(rng, w, h, 3, 0.42, 0.58);
    const int rects = 12 + (w * h) / 1024;
    for (int i = 0; i < rects; ++i) {
        const int rw = 8 + static_cast<int>(rng.next_double() * (w / 5));
        const int rh = 8 + static_cast<int>(rng.next_double() * (h / 5));
        const int x0 = static_cast<int>(rng.next_double() * (w - rw));
        const int y0 = static_cast<int>(rng.next_double() * (h - rh));
        const double contrast = 0.08 + rng.next_double() * 0.42;
        const double level = (i % 2) ? 0.5 + contrast : 0.5 - contrast;
        Raster rect = make_raster(w, h, 1, 0.0);
        for (int y = y0; y < y0 + rh; ++y)
            for (int x = x0; x < x0 + rw; ++x) rect.at(x, y) = 1.0;
        const double preblur = (i % 4) * 0.4;
        if (preblur > 0) rect = gaussian_blur(rect, preblur);
        for (size_t k = 0; k < base.data.size(); ++k)
            base.data[k] = base.data[k] * (1 - rect.data[k]) + level * rect.data[k];
    }
    for (double& v : base.data) v = clamp01(v);
    return base;
}

inline double bilinear_gray(const Raster& canvas, double x, double y) {
    const int w = canvas.width, h = canvas.height;
    if (x < 0) x = 0;
    if (y < 0) y = 0;
    if (x > w - 1) x = w - 1;
    if (y > h - 1) y = h - 1;
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = x0 + 1 < w ? x0 + 1 : x0;
    const int y1 = y0 + 1 < h ? y0 + 1 : y0;
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * canvas.at(x0, y0) + fx * canvas.at(x1, y0)) +
           fy * ((1 - fx) * canvas.at(x0, y1) + fx * canvas.at(x1, y1));
}

// Crop a w x h window from the canvas at offset (ox, oy), bilinear.
inline Raster sample_window(const Raster& canvas, int w, int h, double ox, double oy) {
    Raster out = make_raster(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = bilinear_gray(canvas, x + ox, y + oy);
    return out;
}

inline Raster gaussian_blur(const Raster& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        k[t + radius] = std::exp(-(static_cast<double>(t) * t) / (2.0 * sigma * sigma));
        sum += k[t + radius];
    }
    for (double& v : k) v /= sum;
    const int w = src.width, h = src.height;
    auto clamped = [&](const std::vector<double>& d, int x, int y) {
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return d[static_cast<size_t>(y) * w + x];
    };
    Raster tmp = make_raster(w, h, 1), out = make_raster(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int t = -radius; t <= radius; ++t) s += k[t + radius] * clamped(src.data, x + t, y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int t = -radius; t <= radius; ++t) s += k[t + radius] * clamped(tmp.data, x, y + t);
            out.at(x, y) = s;
        }
    return out;
}

} // namespace fixture_detail

// ---- in-memory generators (the CLI-facing make_fixture writes these out) ----

// Constant-velocity translating clip; frame t is the canvas window at offset
// t * (dx, dy). Integer steps reproduce pixels exactly.
inline FrameSequence translation_sequence(const FixtureSpec& spec) {
    CounterRng rng(spec.seed);
    const int margin = 4 + static_cast<int>(std::ceil(
                               std::max(std::abs(spec.dx), std::abs(spec.dy)) * spec.frames));
    Raster canvas = fixture_detail::make_texture(rng, spec.width + 2 * margin,
                                                 spec.height + 2 * margin, 2, 0.0, 1.0);
    FrameSequence seq;
    // content displaced by +t*(dx, dy): the sampling window slides the other way
    for (int t = 0; t < spec.frames; ++t) {
        Raster f = fixture_detail::sample_window(canvas, spec.width, spec.height,
                                                 margin - t * spec.dx, margin - t * spec.dy);
        fixture_detail::quantize_frame(f);
        append_frame(seq, std::move(f));
    }
    return seq;
}

struct FlickerFixture {
    FrameSequence real;       // clean oscillating clip
    FrameSequence fake;       // same clip + per-pixel intensity noise
    FlowSeries analytic_flow; // exact flow of the clean clip (uniform per pair)
    FlowSeries noisy_flow;    // analytic flow + injected per-component noise
    double injected_variance_x = 0.0; // sample variance of the injected flow noise
    double injected_variance_y = 0.0;
    std::vector<double> offsets; // horizontal subpixel offset per frame
};

inline FlickerFixture flicker_fixture(const FixtureSpec& spec) {
    CounterRng rng(spec.seed);
    CounterRng noise_rng = rng.stream(1);
    CounterRng flow_rng = rng.stream(2);

    const int margin = 4 + static_cast<int>(std::ceil(spec.motion_amplitude)) + 1;
    Raster canvas = fixture_detail::make_test_card(rng, spec.width + 2 * margin,
                                                   spec.height + 2 * margin);
    FlickerFixture fx;
    for (int t = 0; t < spec.frames; ++t) {
        const double offset =
            spec.motion_amplitude *
            std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.motion_period);
        fx.offsets.push_back(offset);
        Raster clean = fixture_detail::sample_window(canvas, spec.width, spec.height,
                                                     margin - offset, margin);
        Raster noisy = clean;
        for (double& v : noisy.data)
            v = fixture_detail::clamp01(v + spec.intensity_sigma * noise_rng.next_gaussian());
        fixture_detail::quantize_frame(clean);
        fixture_detail::quantize_frame(noisy);
        append_frame(fx.real, std::move(clean));
        append_frame(fx.fake, std::move(noisy));
    }

    // Aligned flow pair: the clean clip's exact uniform flow, and a copy with
    // injected noise whose realized sample variance is recorded.
    double sum_x = 0, sum_y = 0, ssq_x = 0, ssq_y = 0;
    size_t count = 0;
    for (int t = 0; t + 1 < spec.frames; ++t) {
        const float du = static_cast<float>(fx.offsets[t + 1] - fx.offsets[t]);
        FlowField exact = make_flow(spec.width, spec.height);
        FlowField noisy = make_flow(spec.width, spec.height);
        for (size_t i = 0; i < exact.u.size(); ++i) {
            exact.u[i] = du;
            exact.v[i] = 0.f;
            const double nx = spec.flow_noise_sigma * flow_rng.next_gaussian();
            const double ny = spec.flow_noise_sigma * flow_rng.next_gaussian();
            noisy.u[i] = static_cast<float>(du + nx);
            noisy.v[i] = static_cast<float>(ny);
            sum_x += nx;
            sum_y += ny;
            ssq_x += nx * nx;
            ssq_y += ny * ny;
            ++count;
        }
        append_field(fx.analytic_flow, std::move(exact));
        append_field(fx.noisy_flow, std::move(noisy));
    }
    if (count > 1) {
        const double n = static_cast<double>(count);
        fx.injected_variance_x = (ssq_x - sum_x * sum_x / n) / (n - 1);
        fx.injected_variance_y = (ssq_y - sum_y * sum_y / n) / (n - 1);
    }
    return fx;
}

struct GaussianFlowFixture {
    FlowSeries real; // per-pixel samples from N(mu, cov)
    FlowSeries fake; // real + independent N(0, noise_variance) per component
    double true_d = 0.0;
};

inline GaussianFlowFixture gaussian_flow_fixture(const FixtureSpec& spec) {
    if (!(spec.cov_xx > 0.0) || !(spec.cov_yy - spec.cov_xy * spec.cov_xy / spec.cov_xx > 0.0))
        throw ValidationError("gaussian_flow fixture: covariance not positive definite");
    CounterRng rng(spec.seed);
    const double l11 = std::sqrt(spec.cov_xx);
    const double l21 = spec.cov_xy / l11;
    const double l22 = std::sqrt(spec.cov_yy - l21 * l21);
    const double noise_sd = std::sqrt(spec.noise_variance_per_component);

    GaussianFlowFixture fx;
    fx.true_d = std::sqrt(2.0 * spec.noise_variance_per_component);
    for (int t = 0; t < spec.frames; ++t) {
        FlowField real = make_flow(spec.width, spec.height);
        FlowField fake = make_flow(spec.width, spec.height);
        for (size_t i = 0; i < real.u.size(); ++i) {
            const double z1 = rng.next_gaussian();
            const double z2 = rng.next_gaussian();
            const double rx = spec.mu_x + l11 * z1;
            const double ry = spec.mu_y + l21 * z1 + l22 * z2;
            real.u[i] = static_cast<float>(rx);
            real.v[i] = static_cast<float>(ry);
            fake.u[i] = static_cast<float>(rx + noise_sd * rng.next_gaussian());
            fake.v[i] = static_cast<float>(ry + noise_sd * rng.next_gaussian());
        }
        append_field(fx.real, std::move(real));
        append_field(fx.fake, std::move(fake));
    }
    return fx;
}

struct MouthModelFixture {
    MorphableModel model;
    std::string scheme = "inner6"; // projected landmark convention
    double gamma_intercept = 0.0;  // gamma(alpha1) = intercept + slope * alpha1
    double gamma_slope = 0.0;
};

// Vertices 0..5 are the lip landmarks (upper row y=+0.5, lower row y=-0.5);
// shape basis 0 displaces them apart vertically, so the lip opening is affine
// in alpha_1. Remaining bases are random orthonormal completions.
inline MouthModelFixture mouth_model_fixture(const FixtureSpec& spec) {
    const int n = std::max(spec.model_vertices, 8);
    const int m = std::max(spec.model_bases, 1);
    const int rows = 3 * n;
    CounterRng rng(spec.seed);

    MouthModelFixture fx;
    MorphableModel& model = fx.model;
    model.n = n;
    model.m = m;
    model.mean_shape = Eigen::VectorXd::Zero(rows);
    const double lip_x[3] = {-1.0, 0.0, 1.0};
    for (int i = 0; i < 3; ++i) { // upper inner lip
        model.mean_shape(3 * i + 0) = lip_x[i];
        model.mean_shape(3 * i + 1) = 0.5;
    }
    for (int i = 3; i < 6; ++i) { // lower inner lip
        model.mean_shape(3 * i + 0) = lip_x[i - 3];
        model.mean_shape(3 * i + 1) = -0.5;
    }
    for (int i = 6; i < n; ++i)
        for (int k = 0; k < 3; ++k) model.mean_shape(3 * i + k) = rng.uniform(-2.0, 2.0);
    model.mean_texture = Eigen::VectorXd::Zero(rows);
    for (int i = 0; i < rows; ++i) model.mean_texture(i) = rng.uniform(0.0, 1.0);

    // Opening direction: +y on the upper lip vertices, -y on the lower ones.
    Eigen::VectorXd opening = Eigen::VectorXd::Zero(rows);
    for (int i = 0; i < 3; ++i) opening(3 * i + 1) = 1.0;
    for (int i = 3; i < 6; ++i) opening(3 * i + 1) = -1.0;
    opening /= opening.norm();

    Eigen::MatrixXd raw(rows, m);
    raw.col(0) = opening;
    for (int j = 1; j < m; ++j)
        for (int i = 0; i < rows; ++i) raw(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    model.shape_basis = qr.householderQ() * Eigen::MatrixXd::Identity(rows, m);
    if (model.shape_basis.col(0).dot(opening) < 0) model.shape_basis.col(0) *= -1.0;
    for (int j = 0; j < m; ++j) model.shape_basis.col(j).normalize();

    Eigen::MatrixXd raw_t(rows, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < rows; ++i) raw_t(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_t(raw_t);
    model.texture_basis = qr_t.householderQ() * Eigen::MatrixXd::Identity(rows, m);
    for (int j = 0; j < m; ++j) model.texture_basis.col(j).normalize();

    model.shape_eigenvalues = Eigen::VectorXd(m);
    model.texture_eigenvalues = Eigen::VectorXd(m);
    for (int j = 0; j < m; ++j) {
        model.shape_eigenvalues(j) = 2.0 / (1.0 + j);
        model.texture_eigenvalues(j) = 1.5 / (1.0 + j);
    }
    model.landmark_indices = {0, 1, 2, 3, 4, 5};
    validate_model(model);

    // gamma(alpha1): mean gap 1.0 plus the basis-0 displacement of the two
    // centroids, 2 * sigma_1 / sqrt(6) per unit alpha1.
    fx.gamma_intercept = 1.0;
    fx.gamma_slope = model.shape_eigenvalues(0) * 2.0 / std::sqrt(6.0);
    return fx;
}

// ---- on-disk orchestration ----

// Writes the assets for one spec into out_dir plus a manifest.json recording
// the generator-side ground truth. Returns the manifest.
inline nlohmann::json make_fixture(const FixtureSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto at = [&](const std::string& rel) { return (fs::path(out_dir) / rel).string(); };

    nlohmann::json manifest;
    manifest["kind"] = spec.kind;
    manifest["seed"] = spec.seed;

    if (spec.kind == "translation") {
        const FrameSequence seq = translation_sequence(spec);
        fs::create_directories(at("frames"));
        store_frames(seq, at("frames/frame_%05d.pgm"));
        manifest["true_flow"] = {{"dx", spec.dx}, {"dy", spec.dy}};
        manifest["frames"] = spec.frames;
        manifest["width"] = spec.width;
        manifest["height"] = spec.height;
    } else if (spec.kind == "flicker") {
        const FlickerFixture fx = flicker_fixture(spec);
        fs::create_directories(at("real"));
        fs::create_directories(at("fake"));
        store_frames(fx.real, at("real/frame_%05d.pgm"));
        store_frames(fx.fake, at("fake/frame_%05d.pgm"));
        store_flow_series(fx.analytic_flow, at("real_flow"));
        store_flow_series(fx.noisy_flow, at("fake_flow"));
        manifest["intensity_sigma"] = spec.intensity_sigma;
        manifest["motion_amplitude"] = spec.motion_amplitude;
        manifest["motion_period"] = spec.motion_period;
        manifest["flow_noise_sigma"] = spec.flow_noise_sigma;
        manifest["true_component_variance"] = {{"x", round_g9(fx.injected_variance_x)},
                                               {"y", round_g9(fx.injected_variance_y)}};
        manifest["offsets"] = fx.offsets;
        manifest["frames"] = spec.frames;
    } else if (spec.kind == "gaussian_flow") {
        const GaussianFlowFixture fx = gaussian_flow_fixture(spec);
        store_flow_series(fx.real, at("real_flow"));
        store_flow_series(fx.fake, at("fake_flow"));
        manifest["mu"] = {spec.mu_x, spec.mu_y};
        manifest["cov"] = {{spec.cov_xx, spec.cov_xy}, {spec.cov_xy, spec.cov_yy}};
        manifest["noise_variance_per_component"] = spec.noise_variance_per_component;
        manifest["true_d"] = round_g9(fx.true_d);
        manifest["samples"] = spec.frames;
    } else if (spec.kind == "mouth_model") {
        const MouthModelFixture fx = mouth_model_fixture(spec);
        store_model(fx.model, at("model.json"));
        auto gammas = nlohmann::json::array();
        for (double a1 : spec.alpha_grid) {
            FaceParams p;
            p.alpha = Eigen::VectorXd::Zero(fx.model.m);
            p.beta = Eigen::VectorXd::Zero(fx.model.m);
            p.alpha(0) = a1;
            const auto sample = synthesize(fx.model, p);
            const auto lms = project_landmarks(sample.shape, fx.model);
            gammas.push_back(round_g9(lip_distance(lms, lip_scheme(fx.scheme))));
        }
        manifest["scheme"] = fx.scheme;
        manifest["alpha_grid"] = spec.alpha_grid;
        manifest["gamma"] = gammas;
        manifest["gamma_intercept"] = round_g9(fx.gamma_intercept);
        manifest["gamma_slope"] = round_g9(fx.gamma_slope);
    } else if (spec.kind == "blur_ladder") {
        CounterRng rng(spec.seed);
        const Raster base = fixture_detail::make_test_card(rng, spec.width, spec.height);
        auto files = nlohmann::json::array();
        for (size_t i = 0; i < spec.blur_sigmas.size(); ++i) {
            Raster img = fixture_detail::gaussian_blur(base, spec.blur_sigmas[i]);
            fixture_detail::quantize_frame(img);
            char name[64];
            std::snprintf(name, sizeof(name), "blur_%02zu.pgm", i);
            store_pnm(img, at(name));
            files.push_back(name);
        }
        manifest["blur_sigmas"] = spec.blur_sigmas;
        manifest["files"] = files;
    } else {
        throw ValidationError("make_fixture: unknown kind '" + spec.kind + "'");
    }

    const std::string text = manifest.dump(2) + "\n";
    write_file_bytes(at("manifest.json"), std::vector<uint8_t>(text.begin(), text.end()));
    return manifest;
}

} // namespace talkstab
