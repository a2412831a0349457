#pragma once

// No-reference sharpness: cumulative probability of blur detection. Edges
// come from Sobel magnitudes against a per-block threshold; each edge pixel's
// width is the pixel span between the local luminance extrema along its
// (quantized) gradient direction; the per-edge blur probability is
//   P_blur = 1 - exp(-(w / w_jnb(contrast))^beta)
// and the score is the probability mass with P_blur <= p_jnb over the edge
// pixels of 64x64 blocks that contain edges. Higher means sharper.

#include <cmath>
#include <numbers>
#include <vector>

#include "talkstab/core.hpp"
#include "talkstab/parallel.hpp"

namespace talkstab {

struct CpbdParams {
    int block_size = 64;
    double beta = 3.6;
    double p_jnb = 0.63;                  // probability at the just-noticeable width
    double jnb_width_low_contrast = 5.0;  // w_jnb for contrast <= contrast_threshold
    double jnb_width_high_contrast = 3.0;
    double contrast_threshold = 50.0;     // 8-bit contrast split
    double edge_floor = 8.0;              // minimum Sobel magnitude (8-bit scale)
    double block_mean_factor = 2.0;       // block threshold = factor * mean magnitude
    double edge_block_fraction = 0.002;   // minimum edge fraction for a block to count
    double min_traced_contrast = 8.0;     // traces below this span are quantization noise
};

namespace detail {

struct LumaGrid {
    int w = 0, h = 0;
    std::vector<double> v; // 8-bit scale luminance

    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
    double clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return at(x, y);
    }
};

// Walks from (x, y) in steps of (sx, sy) while luminance keeps strictly
// moving in `direction` (+1 rising, -1 falling); returns the step count and
// the luminance at the extremum.
inline int trace_extremum(const LumaGrid& g, int x, int y, int sx, int sy, int direction,
                          double& extremum) {
    int steps = 0;
    double cur = g.at(x, y);
    while (true) {
        const int nx = x + sx, ny = y + sy;
        if (nx < 0 || nx >= g.w || ny < 0 || ny >= g.h) break;
        const double next = g.at(nx, ny);
        if (direction > 0 ? (next <= cur) : (next >= cur)) break;
        cur = next;
        x = nx;
        y = ny;
        ++steps;
    }
    extremum = cur;
    return steps;
}

} // namespace detail

inline double cpbd(const Raster& frame, const CpbdParams& params = {}) {
    if (frame.width < params.block_size || frame.height < params.block_size)
        throw ValidationError("cpbd: image too small (min dimension " +
                              std::to_string(params.block_size) + ")");

    detail::LumaGrid luma;
    luma.w = frame.width;
    luma.h = frame.height;
    luma.v = to_gray(frame);
    for (double& v : luma.v) v *= 255.0;

    const int w = luma.w, h = luma.h;
    std::vector<double> gx(static_cast<size_t>(w) * h), gy(gx.size()), mag(gx.size());
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const auto L = [&](int xx, int yy) { return luma.clamped(xx, yy); };
            const double dx = (L(x + 1, y - 1) + 2 * L(x + 1, y) + L(x + 1, y + 1)) -
                              (L(x - 1, y - 1) + 2 * L(x - 1, y) + L(x - 1, y + 1));
            const double dy = (L(x - 1, y + 1) + 2 * L(x, y + 1) + L(x + 1, y + 1)) -
                              (L(x - 1, y - 1) + 2 * L(x, y - 1) + L(x + 1, y - 1));
            const size_t i = static_cast<size_t>(y) * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = std::hypot(dx, dy);
        }
    });

    // 8 direction steps at 45-degree quantization.
    static const int step_x[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int step_y[8] = {0, 1, 1, 1, 0, -1, -1, -1};

    const int bs = params.block_size;
    const int blocks_x = w / bs;
    const int blocks_y = h / bs;
    size_t edge_total = 0, edge_sharp = 0;

    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            double mean_mag = 0.0;
            for (int y = by * bs; y < (by + 1) * bs; ++y)
                for (int x = bx * bs; x < (bx + 1) * bs; ++x)
                    mean_mag += mag[static_cast<size_t>(y) * w + x];
            mean_mag /= static_cast<double>(bs) * bs;
            const double threshold = std::max(params.edge_floor,
                                              params.block_mean_factor * mean_mag);

            std::vector<std::pair<int, int>> edges;
            for (int y = by * bs; y < (by + 1) * bs; ++y)
                for (int x = bx * bs; x < (bx + 1) * bs; ++x)
                    if (mag[static_cast<size_t>(y) * w + x] > threshold) edges.emplace_back(x, y);
            if (static_cast<double>(edges.size()) <=
                params.edge_block_fraction * bs * bs)
                continue; // not an edge block

            for (const auto& [x, y] : edges) {
                const size_t i = static_cast<size_t>(y) * w + x;
                const double angle = std::atan2(gy[i], gx[i]);
                const int dir =
                    ((static_cast<int>(std::lround(angle / (std::numbers::pi / 4))) % 8) + 8) % 8;
                double hi_luma, lo_luma;
                const int up = detail::trace_extremum(luma, x, y, step_x[dir], step_y[dir],
                                                      +1, hi_luma);
                const int down = detail::trace_extremum(luma, x, y, -step_x[dir], -step_y[dir],
                                                        -1, lo_luma);
                const int width = up + down;
                if (width == 0) continue; // isolated plateau, not a traceable edge
                const double contrast = hi_luma - lo_luma;
                if (contrast < params.min_traced_contrast) continue;
                const double w_jnb = contrast <= params.contrast_threshold
                                         ? params.jnb_width_low_contrast
                                         : params.jnb_width_high_contrast;
                const double p_blur = 1.0 - std::exp(-std::pow(width / w_jnb, params.beta));
                ++edge_total;
                if (p_blur <= params.p_jnb) ++edge_sharp;
            }
        }
    }
    if (edge_total == 0) throw ValidationError("cpbd: no edges");
    return static_cast<double>(edge_sharp) / static_cast<double>(edge_total);
}

} // namespace talkstab
