#pragma once

// Middlebury .flo container: 4-byte sentinel 202021.25 (little-endian float),
// int32 width, int32 height, then row-major interleaved float32 (u, v) pairs.

#include <bit>
#include <string>
#include <vector>

#include "talkstab/core.hpp"
#include "talkstab/io_util.hpp"

namespace talkstab {

inline constexpr float kFloSentinel = 202021.25f;

inline FlowField load_flow(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 12) throw IoError("truncated .flo header: " + path);
    const float magic = std::bit_cast<float>(decode_u32le(bytes.data()));
    if (magic != kFloSentinel) throw IoError("bad magic in .flo file: " + path);
    const int32_t w = static_cast<int32_t>(decode_u32le(bytes.data() + 4));
    const int32_t h = static_cast<int32_t>(decode_u32le(bytes.data() + 8));
    if (w < 1 || h < 1 || static_cast<int64_t>(w) * h > (1 << 30))
        throw IoError("bad .flo dimensions: " + path);
    const size_t count = static_cast<size_t>(w) * h;
    if (bytes.size() < 12 + count * 8) throw IoError("truncated .flo payload: " + path);

    FlowField f = make_flow(w, h);
    const uint8_t* p = bytes.data() + 12;
    for (size_t i = 0; i < count; ++i) {
        f.u[i] = std::bit_cast<float>(decode_u32le(p));
        f.v[i] = std::bit_cast<float>(decode_u32le(p + 4));
        p += 8;
    }
    if (!all_finite(f.u) || !all_finite(f.v))
        throw IoError("non-finite entries in .flo file: " + path);
    return f;
}

inline void store_flow(const FlowField& field, const std::string& path) {
    if (!all_finite(field.u) || !all_finite(field.v))
        throw ValidationError("store_flow: non-finite entries");
    const size_t count = static_cast<size_t>(field.width) * field.height;
    std::vector<uint8_t> bytes;
    bytes.reserve(12 + count * 8);
    encode_u32le(std::bit_cast<uint32_t>(kFloSentinel), bytes);
    encode_u32le(static_cast<uint32_t>(field.width), bytes);
    encode_u32le(static_cast<uint32_t>(field.height), bytes);
    for (size_t i = 0; i < count; ++i) {
        encode_u32le(std::bit_cast<uint32_t>(field.u[i]), bytes);
        encode_u32le(std::bit_cast<uint32_t>(field.v[i]), bytes);
    }
    write_file_bytes(path, bytes);
}

// Loads every .flo in a directory, sorted by filename.
inline FlowSeries load_flow_series(const std::string& dir) {
    const auto paths = list_directory(dir, ".flo");
    if (paths.empty()) throw IoError("no .flo files in " + dir);
    FlowSeries series;
    for (const auto& p : paths) append_field(series, load_flow(p));
    return series;
}

inline std::vector<std::string> store_flow_series(const FlowSeries& series,
                                                  const std::string& dir,
                                                  const std::string& name_pattern = "flow_%05d.flo") {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    for (size_t i = 0; i < series.size(); ++i) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), name_pattern.c_str(), static_cast<int>(i));
        const std::string path = (std::filesystem::path(dir) / buf).string();
        store_flow(series.fields[i], path);
        written.push_back(path);
    }
    return written;
}

} // namespace talkstab
