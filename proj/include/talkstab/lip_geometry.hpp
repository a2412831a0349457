#pragma once

// Lip-opening measurement: Euclidean distance between the centroid of the
// upper-inner-lip landmarks and the centroid of the lower-inner-lip landmarks.

#include <cmath>
#include <string>
#include <vector>

#include "talkstab/core.hpp"

namespace talkstab {

struct LipScheme {
    std::string name;
    std::vector<int> upper; // indices of the upper-inner-lip landmarks
    std::vector<int> lower;
};

// "ibug68": the 68-point convention, inner-lip triples (0-based).
// "inner6": a minimal 6-point mouth, upper {0,1,2} / lower {3,4,5}; used by
//           synthesized mouth models whose designated lip vertices project in
//           that order.
inline LipScheme lip_scheme(const std::string& name) {
    if (name == "ibug68") return {name, {61, 62, 63}, {65, 66, 67}};
    if (name == "inner6") return {name, {0, 1, 2}, {3, 4, 5}};
    throw ValidationError("unknown landmark scheme: " + name);
}

inline double lip_distance(const LandmarkSet& lms, const LipScheme& scheme) {
    const size_t points = lms.points();
    auto centroid = [&](const std::vector<int>& indices, double* out) {
        for (int k = 0; k < lms.dim; ++k) out[k] = 0.0;
        for (int idx : indices) {
            if (idx < 0 || static_cast<size_t>(idx) >= points)
                throw ValidationError("lip_distance: landmark index " + std::to_string(idx) +
                                      " missing from set of " + std::to_string(points));
            for (int k = 0; k < lms.dim; ++k) {
                const double v = lms.coords[static_cast<size_t>(idx) * lms.dim + k];
                if (!std::isfinite(v)) throw ValidationError("lip_distance: non-finite coordinate");
                out[k] += v;
            }
        }
        for (int k = 0; k < lms.dim; ++k) out[k] /= static_cast<double>(indices.size());
    };
    double up[3] = {0, 0, 0}, lo[3] = {0, 0, 0};
    centroid(scheme.upper, up);
    centroid(scheme.lower, lo);
    double sq = 0.0;
    for (int k = 0; k < lms.dim; ++k) {
        const double d = up[k] - lo[k];
        sq += d * d;
    }
    return std::sqrt(sq);
}

inline LipDistanceSeries lip_series(const LandmarkTrack& track, const LipScheme& scheme) {
    if (track.frames.empty()) throw ValidationError("lip_series: empty track");
    LipDistanceSeries series;
    series.source = scheme.name;
    series.values.reserve(track.size());
    for (const auto& set : track.frames) series.values.push_back(lip_distance(set, scheme));
    return series;
}

} // namespace talkstab
