#pragma once

// Lip-sync and visual-quality metric suite: Procrustes disparity (see
// procrustes.hpp), cosine similarity and Pearson correlation of lip-distance
// series, CPBD sharpness (see cpbd.hpp), and the JSON report container.

#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/cpbd.hpp"
#include "talkstab/io_util.hpp"
#include "talkstab/procrustes.hpp"

namespace talkstab {

// Cosine similarity of lip-distance sequences.
inline double csld(const LipDistanceSeries& a, const LipDistanceSeries& b) {
    if (a.size() != b.size()) throw ValidationError("csld: length mismatch");
    if (a.size() < 1) throw ValidationError("csld: empty series");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("csld: zero vector");
    return dot / std::sqrt(na * nb);
}

// Pearson correlation of lip-distance sequences.
inline double pcld(const LipDistanceSeries& a, const LipDistanceSeries& b) {
    if (a.size() != b.size()) throw ValidationError("pcld: length mismatch");
    if (a.size() < 2) throw ValidationError("pcld: need at least 2 samples");
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a.values[i];
        mb += b.values[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a.values[i] - ma;
        const double db = b.values[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw ValidationError("pcld: constant series");
    return sab / std::sqrt(saa * sbb);
}

// Report container; FID/LPIPS/FVD need pretrained networks and stay null so
// externally computed values can be merged into the same document.
struct MetricReport {
    std::optional<double> pd;
    std::vector<double> pd_per_frame;
    std::optional<double> csld_value;
    std::optional<double> pcld_value;
    std::optional<double> cpbd_mean;
    std::vector<double> cpbd_per_frame;
    std::optional<double> mnp;
    nlohmann::json config = nlohmann::json::object();
};

inline nlohmann::json metric_report_to_json(const MetricReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(round_g9(*v)) : nlohmann::json();
    };
    auto vec = [](const std::vector<double>& v) {
        if (v.empty()) return nlohmann::json();
        auto arr = nlohmann::json::array();
        for (double x : v) arr.push_back(round_g9(x));
        return nlohmann::json(arr);
    };
    nlohmann::json j;
    j["pd"] = opt(report.pd);
    j["pd_per_frame"] = vec(report.pd_per_frame);
    j["csld"] = opt(report.csld_value);
    j["pcld"] = opt(report.pcld_value);
    j["cpbd_mean"] = opt(report.cpbd_mean);
    j["cpbd_per_frame"] = vec(report.cpbd_per_frame);
    j["mnp"] = opt(report.mnp);
    j["fid"] = nlohmann::json();
    j["lpips"] = nlohmann::json();
    j["fvd"] = nlohmann::json();
    j["config"] = report.config;
    return j;
}

// Two-column CSV (frame, value) for plotting.
inline void store_series_csv(const std::vector<double>& values, const std::string& header,
                             const std::string& path) {
    std::string out = "frame," + header + "\n";
    for (size_t i = 0; i < values.size(); ++i)
        out += std::to_string(i) + "," + format_g9(values[i]) + "\n";
    write_file_bytes(path, std::vector<uint8_t>(out.begin(), out.end()));
}

} // namespace talkstab
