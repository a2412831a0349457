#pragma once

// Structure-embedding control: anchor selection at the smallest lip opening,
// the lip-distance ratio law for lambda, anchor-based embedding
// interpolation/extrapolation, and a checker for the quasi-monotonicity of a
// lip-distance mapping sampled along an embedding line.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/lip_geometry.hpp"

namespace talkstab {

struct ControllerState {
    EmbeddingVector anchor_embedding;
    double anchor_gamma = 0.0;
    double lambda_min = 0.25;
    double lambda_max = 4.0;
    double epsilon_gamma = 1e-6; // in landmark units

    void validate() const {
        if (!(lambda_min > 0.0 && lambda_min <= 1.0 && lambda_max >= 1.0))
            throw ValidationError("controller state: need 0 < lambda_min <= 1 <= lambda_max");
        if (!(epsilon_gamma > 0.0))
            throw ValidationError("controller state: epsilon_gamma must be > 0");
    }
};

struct AnchorSelection {
    size_t index = 0;
    ControllerState state;
};

inline AnchorSelection select_anchor(const LandmarkTrack& track,
                                     const std::vector<EmbeddingVector>& embeddings,
                                     const LipScheme& scheme,
                                     double lambda_min = 0.25, double lambda_max = 4.0) {
    if (track.frames.empty()) throw ValidationError("select_anchor: empty track");
    if (track.size() != embeddings.size())
        throw ValidationError("select_anchor: track/embedding length mismatch");
    const size_t dim = embeddings.front().dim();
    for (const auto& e : embeddings)
        if (e.dim() != dim) throw ValidationError("select_anchor: inconsistent embedding dims");

    size_t best = 0;
    double best_gamma = lip_distance(track.frames[0], scheme);
    for (size_t i = 1; i < track.size(); ++i) {
        const double g = lip_distance(track.frames[i], scheme);
        if (g < best_gamma) { // strict: ties keep the lowest index
            best_gamma = g;
            best = i;
        }
    }
    AnchorSelection sel;
    sel.index = best;
    sel.state.anchor_embedding = embeddings[best];
    sel.state.anchor_gamma = best_gamma;
    sel.state.lambda_min = lambda_min;
    sel.state.lambda_max = lambda_max;
    sel.state.validate();
    return sel;
}

// lambda = gamma_current / gamma_previous, guarded against vanishing
// denominators and clamped into the configured trust region.
inline double compute_lambda(double gamma_current, double gamma_previous,
                             const ControllerState& state) {
    if (gamma_current < 0.0 || gamma_previous < 0.0)
        throw ValidationError("compute_lambda: negative lip distance");
    const double denom = gamma_previous > state.epsilon_gamma ? gamma_previous
                                                              : state.epsilon_gamma;
    double lambda = gamma_current / denom;
    if (lambda < state.lambda_min) lambda = state.lambda_min;
    if (lambda > state.lambda_max) lambda = state.lambda_max;
    return lambda;
}

// (1 - lambda) * anchor + lambda * current, componentwise; lambda outside
// [0, 1] extrapolates along the anchor->current line.
inline EmbeddingVector adjust_embedding(const ControllerState& state,
                                        const EmbeddingVector& current, double lambda) {
    if (state.anchor_embedding.dim() != current.dim())
        throw ValidationError("adjust_embedding: dimension mismatch");
    EmbeddingVector out;
    out.values.resize(current.dim());
    const double one_minus = 1.0 - lambda;
    for (size_t i = 0; i < current.dim(); ++i)
        out.values[i] = one_minus * state.anchor_embedding.values[i] + lambda * current.values[i];
    return out;
}

enum class QmCase { extrapolate_below, interpolate, extrapolate_above };

struct QmVerdict {
    bool holds = true;
    QmCase violated_case = QmCase::interpolate;
    double lambda = 0.0; // lambda of the first violation
    double tolerance = 0.0;
};

// Checks sampled values of a lip-distance mapping f along the lambda line
// against the three-case quasi-monotonicity bounds:
//   lambda <= 0:      f <= min(f(0), f(1))
//   0 < lambda < 1:   min(f(0), f(1)) <= f <= max(f(0), f(1))
//   lambda >= 1:      f >= max(f(0), f(1))
// each with tolerance tau = max(tolerance_fraction * |f(1) - f(0)|, 1e-9).
inline QmVerdict quasi_monotonicity_check(std::span<const double> lambdas,
                                          std::span<const double> values,
                                          double tolerance_fraction = 0.02) {
    if (lambdas.size() != values.size())
        throw ValidationError("quasi_monotonicity_check: grid/value length mismatch");
    if (lambdas.empty()) throw ValidationError("quasi_monotonicity_check: empty grid");
    double f0 = std::numeric_limits<double>::quiet_NaN();
    double f1 = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (i > 0 && !(lambdas[i] >= lambdas[i - 1]))
            throw ValidationError("quasi_monotonicity_check: grid not sorted");
        if (!(std::isfinite(values[i]) && values[i] >= 0.0))
            throw ValidationError("quasi_monotonicity_check: values must be finite and >= 0");
        if (lambdas[i] == 0.0) f0 = values[i];
        if (lambdas[i] == 1.0) f1 = values[i];
    }
    if (std::isnan(f0) || std::isnan(f1))
        throw ValidationError("quasi_monotonicity_check: missing endpoint samples");

    const double lo = f0 < f1 ? f0 : f1;
    const double hi = f0 < f1 ? f1 : f0;
    const double tau = std::max(tolerance_fraction * (hi - lo), 1e-9);

    QmVerdict verdict;
    verdict.tolerance = tau;
    for (size_t i = 0; i < lambdas.size(); ++i) {
        const double l = lambdas[i];
        const double f = values[i];
        QmCase c;
        bool ok;
        if (l <= 0.0) {
            c = QmCase::extrapolate_below;
            ok = f <= lo + tau;
        } else if (l < 1.0) {
            c = QmCase::interpolate;
            ok = f >= lo - tau && f <= hi + tau;
        } else {
            c = QmCase::extrapolate_above;
            ok = f >= hi - tau;
        }
        if (!ok) {
            verdict.holds = false;
            verdict.violated_case = c;
            verdict.lambda = l;
            return verdict;
        }
    }
    return verdict;
}

inline std::string qm_case_name(QmCase c) {
    switch (c) {
        case QmCase::extrapolate_below: return "extrapolate_below";
        case QmCase::interpolate: return "interpolate";
        case QmCase::extrapolate_above: return "extrapolate_above";
    }
    return "?";
}

inline nlohmann::json verdict_to_json(const QmVerdict& v) {
    nlohmann::json j;
    j["verdict"] = v.holds ? "holds" : "violated";
    j["case"] = v.holds ? nlohmann::json() : nlohmann::json(qm_case_name(v.violated_case));
    j["lambda"] = v.holds ? nlohmann::json() : nlohmann::json(v.lambda);
    j["tolerance"] = v.tolerance;
    return j;
}

} // namespace talkstab
