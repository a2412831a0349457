#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "talkstab/core.hpp"

namespace talkstab {

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

// All numeric text output is pinned to 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Round-trips a value through its 9-significant-digit decimal form so that
// stored JSON/CSV numbers reload to exactly what was written.
inline double round_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

// Expands a printf-style pattern ("frame_%04d.pgm") to the existing files
// numbered consecutively from 0 (or 1 when no index-0 file exists).
inline std::vector<std::string> expand_index_pattern(const std::string& pattern) {
    std::vector<std::string> paths;
    auto path_for = [&pattern](long i) {
        char buf[4096];
        std::snprintf(buf, sizeof(buf), pattern.c_str(), static_cast<int>(i));
        return std::string(buf);
    };
    long start = 0;
    if (!std::filesystem::exists(path_for(0))) start = 1;
    for (long i = start; std::filesystem::exists(path_for(i)); ++i)
        paths.push_back(path_for(i));
    return paths;
}

// Lists regular files in a directory with a given extension, sorted by name.
inline std::vector<std::string> list_directory(const std::string& dir,
                                               const std::string& extension) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == extension) paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

inline uint32_t decode_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline void encode_u32le(uint32_t v, std::vector<uint8_t>& out) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

} // namespace talkstab
