#pragma once

// Dense optical flow: Horn-Schunck variational energy (brightness constancy
// against the warped second frame + first-order smoothness), solved with
// fixed-point Jacobi iterations, coarse-to-fine over a factor-2 image pyramid
// built with 5-tap binomial smoothing.

#include <cmath>
#include <vector>

#include "talkstab/core.hpp"
#include "talkstab/parallel.hpp"

namespace talkstab {

struct FlowParams {
    // Weight of the brightness-constancy term relative to the smoothness
    // term, tuned for intensities in [0, 1]. Larger values trust the data
    // more and smooth less.
    double lambda_hs = 15.0;
    int iterations = 100; // Jacobi iterations per pyramid level
    int levels = 3;       // pyramid levels (reduced automatically on tiny inputs)
};

namespace detail {

struct Grid {
    int w = 0;
    int h = 0;
    std::vector<double> v;

    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
    double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
    double clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return at(x, y);
    }
};

inline Grid make_grid(int w, int h) {
    Grid g;
    g.w = w;
    g.h = h;
    g.v.assign(static_cast<size_t>(w) * h, 0.0);
    return g;
}

inline double bilinear(const Grid& g, double x, double y) {
    if (x < 0) x = 0;
    if (y < 0) y = 0;
    if (x > g.w - 1) x = g.w - 1;
    if (y > g.h - 1) y = g.h - 1;
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = x0 + 1 < g.w ? x0 + 1 : x0;
    const int y1 = y0 + 1 < g.h ? y0 + 1 : y0;
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fy) * ((1 - fx) * g.at(x0, y0) + fx * g.at(x1, y0)) +
           fy * ((1 - fx) * g.at(x0, y1) + fx * g.at(x1, y1));
}

// 5-tap binomial [1 4 6 4 1]/16, separable, replicate borders.
inline Grid binomial_smooth(const Grid& src) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    Grid tmp = make_grid(src.w, src.h);
    parallel_for(0, src.h, [&](int y) {
        for (int x = 0; x < src.w; ++x) {
            double s = 0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * src.clamped(x + t, y);
            tmp.at(x, y) = s;
        }
    });
    Grid out = make_grid(src.w, src.h);
    parallel_for(0, src.h, [&](int y) {
        for (int x = 0; x < src.w; ++x) {
            double s = 0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * tmp.clamped(x, y + t);
            out.at(x, y) = s;
        }
    });
    return out;
}

inline Grid downsample2(const Grid& src) {
    const Grid smooth = binomial_smooth(src);
    Grid out = make_grid((src.w + 1) / 2, (src.h + 1) / 2);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) out.at(x, y) = smooth.at(2 * x, 2 * y);
    return out;
}

// Bilinear resize with align-centers mapping; values scaled by the per-axis
// magnification so displacements stay in destination pixel units.
inline Grid resize_flow_component(const Grid& src, int w, int h, double value_scale) {
    Grid out = make_grid(w, h);
    const double sx = static_cast<double>(src.w) / w;
    const double sy = static_cast<double>(src.h) / h;
    for (int y = 0; y < h; ++y) {
        const double yc = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < w; ++x) {
            const double xc = (x + 0.5) * sx - 0.5;
            out.at(x, y) = value_scale * bilinear(src, xc, yc);
        }
    }
    return out;
}

// Horn-Schunck weighted neighborhood average (6-point edge, 12-point corner
// stencil of the original scheme), replicate borders.
inline double hs_average(const Grid& g, int x, int y) {
    return (g.clamped(x - 1, y) + g.clamped(x + 1, y) + g.clamped(x, y - 1) +
            g.clamped(x, y + 1)) * (1.0 / 6.0) +
           (g.clamped(x - 1, y - 1) + g.clamped(x + 1, y - 1) + g.clamped(x - 1, y + 1) +
            g.clamped(x + 1, y + 1)) * (1.0 / 12.0);
}

// One pyramid level: warp the second image by the current flow, linearize
// brightness constancy, and relax the increment with Jacobi sweeps.
inline void solve_level(const Grid& i1, const Grid& i2, Grid& u, Grid& v,
                        const FlowParams& params) {
    const int w = i1.w, h = i1.h;
    Grid warped = make_grid(w, h);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x)
            warped.at(x, y) = bilinear(i2, x + u.at(x, y), y + v.at(x, y));
    });

    // Spatial gradients of the average image; forward/backward differences at
    // the grid edges, central in the interior. Temporal derivative from the
    // warped pair.
    Grid ix = make_grid(w, h), iy = make_grid(w, h), it = make_grid(w, h);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const auto avg = [&](int xx, int yy) {
                return 0.5 * (i1.clamped(xx, yy) + warped.clamped(xx, yy));
            };
            if (x == 0)
                ix.at(x, y) = avg(1, y) - avg(0, y);
            else if (x == w - 1)
                ix.at(x, y) = avg(w - 1, y) - avg(w - 2, y);
            else
                ix.at(x, y) = 0.5 * (avg(x + 1, y) - avg(x - 1, y));
            if (y == 0)
                iy.at(x, y) = avg(x, 1) - avg(x, 0);
            else if (y == h - 1)
                iy.at(x, y) = avg(x, h - 1) - avg(x, h - 2);
            else
                iy.at(x, y) = 0.5 * (avg(x, y + 1) - avg(x, y - 1));
            it.at(x, y) = warped.at(x, y) - i1.at(x, y);
        }
    });

    const double inv_lambda = 1.0 / params.lambda_hs;
    Grid inv_denom = make_grid(w, h);
    for (size_t i = 0; i < inv_denom.v.size(); ++i)
        inv_denom.v[i] = 1.0 / (inv_lambda + ix.v[i] * ix.v[i] + iy.v[i] * iy.v[i]);

    Grid du = make_grid(w, h), dv = make_grid(w, h);
    Grid du_next = make_grid(w, h), dv_next = make_grid(w, h);
    for (int iter = 0; iter < params.iterations; ++iter) {
        parallel_for(0, h, [&](int y) {
            const bool edge_row = (y == 0 || y == h - 1);
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                double ubar, vbar;
                if (edge_row || x == 0 || x == w - 1) {
                    ubar = hs_average(du, x, y);
                    vbar = hs_average(dv, x, y);
                } else {
                    const double* pu = du.v.data() + i;
                    const double* pv = dv.v.data() + i;
                    ubar = (pu[-1] + pu[1] + pu[-w] + pu[w]) * (1.0 / 6.0) +
                           (pu[-w - 1] + pu[-w + 1] + pu[w - 1] + pu[w + 1]) * (1.0 / 12.0);
                    vbar = (pv[-1] + pv[1] + pv[-w] + pv[w]) * (1.0 / 6.0) +
                           (pv[-w - 1] + pv[-w + 1] + pv[w - 1] + pv[w + 1]) * (1.0 / 12.0);
                }
                const double gx = ix.v[i], gy = iy.v[i];
                const double t = (gx * ubar + gy * vbar + it.v[i]) * inv_denom.v[i];
                du_next.v[i] = ubar - gx * t;
                dv_next.v[i] = vbar - gy * t;
            }
        });
        std::swap(du, du_next);
        std::swap(dv, dv_next);
    }
    for (size_t i = 0; i < u.v.size(); ++i) {
        u.v[i] += du.v[i];
        v.v[i] += dv.v[i];
    }
}

inline Grid raster_to_gray_grid(const Raster& r) {
    Grid g;
    g.w = r.width;
    g.h = r.height;
    g.v = to_gray(r);
    return g;
}

} // namespace detail

inline void validate_flow_params(const FlowParams& params) {
    if (!(params.lambda_hs > 0)) throw ValidationError("flow params: lambda_hs must be > 0");
    if (params.iterations < 1) throw ValidationError("flow params: iterations must be >= 1");
    if (params.levels < 1) throw ValidationError("flow params: levels must be >= 1");
}

inline FlowField dense_flow(const Raster& prev, const Raster& next,
                            const FlowParams& params = {}) {
    validate_flow_params(params);
    if (prev.width != next.width || prev.height != next.height ||
        prev.channels != next.channels)
        throw ValidationError("dense_flow: dimension mismatch");

    std::vector<detail::Grid> pyr1{detail::raster_to_gray_grid(prev)};
    std::vector<detail::Grid> pyr2{detail::raster_to_gray_grid(next)};
    for (int l = 1; l < params.levels; ++l) {
        const detail::Grid& top1 = pyr1.back();
        if ((top1.w + 1) / 2 < 2 || (top1.h + 1) / 2 < 2) break; // keep coarsest >= 2x2
        pyr1.push_back(detail::downsample2(top1));
        pyr2.push_back(detail::downsample2(pyr2.back()));
    }

    detail::Grid u = detail::make_grid(pyr1.back().w, pyr1.back().h);
    detail::Grid v = detail::make_grid(pyr1.back().w, pyr1.back().h);
    for (int l = static_cast<int>(pyr1.size()) - 1; l >= 0; --l) {
        if (l != static_cast<int>(pyr1.size()) - 1) {
            const int w = pyr1[l].w, h = pyr1[l].h;
            u = detail::resize_flow_component(u, w, h, static_cast<double>(w) / u.w);
            v = detail::resize_flow_component(v, w, h, static_cast<double>(h) / v.h);
        }
        detail::solve_level(pyr1[l], pyr2[l], u, v, params);
    }

    FlowField out = make_flow(prev.width, prev.height);
    for (size_t i = 0; i < u.v.size(); ++i) {
        out.u[i] = static_cast<float>(u.v[i]);
        out.v[i] = static_cast<float>(v.v[i]);
    }
    return out;
}

inline FlowSeries flow_series(const FrameSequence& seq, const FlowParams& params = {}) {
    if (seq.size() < 2) throw ValidationError("flow_series: need at least 2 frames");
    FlowSeries series;
    for (size_t t = 0; t + 1 < seq.size(); ++t)
        append_field(series, dense_flow(seq.frames[t], seq.frames[t + 1], params));
    return series;
}

} // namespace talkstab
