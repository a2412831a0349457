#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace talkstab {

// I/O-level failures: missing files, malformed containers, truncated payloads.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Contract violations on otherwise well-formed data: dimension mismatches,
// degenerate inputs, out-of-range parameters.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A single raster frame. Pixels are stored channel-interleaved, row-major,
// as reals in [0, 1]; 8-bit data is mapped to k/255 on ingest.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1; // 1 (gray) or 3 (RGB)
    std::vector<double> data;

    double at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

inline Raster make_raster(int width, int height, int channels, double fill = 0.0) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3))
        throw ValidationError("make_raster: bad dimensions");
    Raster r;
    r.width = width;
    r.height = height;
    r.channels = channels;
    r.data.assign(static_cast<size_t>(width) * height * channels, fill);
    return r;
}

// Time-ordered stack of equally sized frames. frame_rate is metadata only.
struct FrameSequence {
    std::vector<Raster> frames;
    int width = 0;
    int height = 0;
    int channels = 1;
    double frame_rate = 25.0;

    size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

inline void append_frame(FrameSequence& seq, Raster frame) {
    if (seq.frames.empty()) {
        seq.width = frame.width;
        seq.height = frame.height;
        seq.channels = frame.channels;
    } else if (frame.width != seq.width || frame.height != seq.height ||
               frame.channels != seq.channels) {
        throw ValidationError("frame sequence: inconsistent dimensions");
    }
    seq.frames.push_back(std::move(frame));
}

// Dense per-pixel displacement between two consecutive frames, in pixels/frame.
// Entries are 32-bit floats so that on-disk round trips are bit-exact.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    float u_at(int x, int y) const { return u[static_cast<size_t>(y) * width + x]; }
    float v_at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
};

inline FlowField make_flow(int width, int height) {
    if (width < 1 || height < 1) throw ValidationError("make_flow: bad dimensions");
    FlowField f;
    f.width = width;
    f.height = height;
    f.u.assign(static_cast<size_t>(width) * height, 0.f);
    f.v.assign(static_cast<size_t>(width) * height, 0.f);
    return f;
}

// One flow field per consecutive frame pair; length = frame count - 1.
struct FlowSeries {
    std::vector<FlowField> fields;
    int width = 0;
    int height = 0;

    size_t size() const { return fields.size(); }
};

inline void append_field(FlowSeries& series, FlowField field) {
    if (series.fields.empty()) {
        series.width = field.width;
        series.height = field.height;
    } else if (field.width != series.width || field.height != series.height) {
        throw ValidationError("flow series: inconsistent dimensions");
    }
    series.fields.push_back(std::move(field));
}

// One frame's landmarks, point-major: coords[p*dim + k].
struct LandmarkSet {
    int dim = 2; // 2 or 3
    std::vector<double> coords;

    size_t points() const { return coords.size() / dim; }
    double x(size_t p) const { return coords[p * dim + 0]; }
    double y(size_t p) const { return coords[p * dim + 1]; }
    double z(size_t p) const { return dim == 3 ? coords[p * dim + 2] : 0.0; }
};

struct LandmarkTrack {
    std::vector<LandmarkSet> frames;
    int dim = 2;
    std::string scheme; // landmark index convention identifier

    size_t size() const { return frames.size(); }
    size_t points() const { return frames.empty() ? 0 : frames.front().points(); }
};

struct RegionMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> member;

    bool at(int x, int y) const { return member[static_cast<size_t>(y) * width + x] != 0; }
    size_t count() const {
        size_t n = 0;
        for (uint8_t m : member) n += (m != 0);
        return n;
    }
};

inline RegionMask full_mask(int width, int height) {
    RegionMask m;
    m.width = width;
    m.height = height;
    m.member.assign(static_cast<size_t>(width) * height, 1);
    return m;
}

struct EmbeddingVector {
    std::vector<double> values;

    size_t dim() const { return values.size(); }
};

// Per-frame lip-opening measurements, in landmark units.
struct LipDistanceSeries {
    std::vector<double> values;
    std::string source; // landmark scheme the series was measured with

    size_t size() const { return values.size(); }
};

// 8-bit quantization used everywhere a real frame goes back to byte storage:
// round half away from zero, clamp to [0, 255].
inline uint8_t quantize_u8(double v) {
    double scaled = v * 255.0;
    long r = std::lround(scaled); // lround rounds halfway cases away from zero
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    return static_cast<uint8_t>(r);
}

// ITU-R BT.601 luma weights.
inline std::vector<double> to_gray(const Raster& frame) {
    std::vector<double> gray(frame.pixel_count());
    if (frame.channels == 1) {
        gray.assign(frame.data.begin(), frame.data.end());
    } else {
        for (size_t i = 0; i < gray.size(); ++i) {
            const double* px = &frame.data[i * 3];
            gray[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
    }
    return gray;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const std::vector<float>& v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace talkstab
