#pragma once

// Binary PNM codecs: PGM (P5) for gray frames and masks, PPM (P6) for RGB.
// maxval is fixed at 255; anything else is rejected rather than rescaled.

#include <cctype>
#include <string>
#include <vector>

#include "talkstab/core.hpp"
#include "talkstab/io_util.hpp"

namespace talkstab {

namespace detail {

struct PnmHeader {
    int magic_channels = 1; // 1 for P5, 3 for P6
    int width = 0;
    int height = 0;
    size_t payload_offset = 0;
};

// Parses "P5/P6 <w> <h> <maxval>" with arbitrary whitespace and '#' comments,
// followed by exactly one whitespace byte before the raw payload.
inline PnmHeader parse_pnm_header(const std::vector<uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw IoError("malformed PNM header (expected P5 or P6): " + path);
    PnmHeader h;
    h.magic_channels = (bytes[1] == '5') ? 1 : 3;

    size_t pos = 2;
    auto next_token = [&]() -> long {
        // skip whitespace and comments
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw IoError("malformed PNM header: " + path);
        long val = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            val = val * 10 + (bytes[pos] - '0');
            if (val > 1000000) throw IoError("malformed PNM header (field too large): " + path);
            ++pos;
        }
        return val;
    };

    h.width = static_cast<int>(next_token());
    h.height = static_cast<int>(next_token());
    const long maxval = next_token();
    if (h.width < 1 || h.height < 1) throw IoError("malformed PNM header (bad size): " + path);
    if (maxval != 255) throw IoError("unsupported PNM maxval (must be 255): " + path);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw IoError("malformed PNM header: " + path);
    h.payload_offset = pos + 1;
    return h;
}

} // namespace detail

inline Raster load_pnm(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    const detail::PnmHeader h = detail::parse_pnm_header(bytes, path);
    const size_t expected = static_cast<size_t>(h.width) * h.height * h.magic_channels;
    if (bytes.size() - h.payload_offset < expected)
        throw IoError("truncated PNM payload: " + path);
    Raster r = make_raster(h.width, h.height, h.magic_channels);
    const uint8_t* src = bytes.data() + h.payload_offset;
    for (size_t i = 0; i < expected; ++i) r.data[i] = src[i] / 255.0;
    return r;
}

inline void store_pnm(const Raster& frame, const std::string& path) {
    if (frame.channels != 1 && frame.channels != 3)
        throw ValidationError("store_pnm: channels must be 1 or 3");
    std::string header = (frame.channels == 1 ? "P5\n" : "P6\n") +
                         std::to_string(frame.width) + " " + std::to_string(frame.height) +
                         "\n255\n";
    std::vector<uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + frame.data.size());
    for (double v : frame.data) bytes.push_back(quantize_u8(v));
    write_file_bytes(path, bytes);
}

// path_pattern is either a printf-style pattern with one integer conversion
// or a directory containing .pgm/.ppm files (sorted by name).
inline FrameSequence load_frames(const std::string& path_pattern, double frame_rate = 25.0) {
    std::vector<std::string> paths;
    if (path_pattern.find('%') != std::string::npos) {
        paths = expand_index_pattern(path_pattern);
    } else if (std::filesystem::is_directory(path_pattern)) {
        paths = list_directory(path_pattern, ".pgm");
        auto ppm = list_directory(path_pattern, ".ppm");
        paths.insert(paths.end(), ppm.begin(), ppm.end());
        std::sort(paths.begin(), paths.end());
    } else if (std::filesystem::exists(path_pattern)) {
        paths.push_back(path_pattern);
    }
    if (paths.empty()) throw IoError("empty sequence: no frames match " + path_pattern);

    FrameSequence seq;
    seq.frame_rate = frame_rate;
    for (const auto& p : paths) append_frame(seq, load_pnm(p));
    return seq;
}

inline std::vector<std::string> store_frames(const FrameSequence& seq,
                                             const std::string& path_pattern) {
    if (seq.empty()) throw ValidationError("store_frames: empty sequence");
    if (path_pattern.find('%') == std::string::npos)
        throw ValidationError("store_frames: pattern needs an integer conversion, e.g. %05d");
    std::vector<std::string> written;
    for (size_t i = 0; i < seq.size(); ++i) {
        char buf[4096];
        std::snprintf(buf, sizeof(buf), path_pattern.c_str(), static_cast<int>(i));
        store_pnm(seq.frames[i], buf);
        written.emplace_back(buf);
    }
    return written;
}

// Mask convention: P5, pixel > 127 means member.
inline RegionMask load_mask(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    const detail::PnmHeader h = detail::parse_pnm_header(bytes, path);
    if (h.magic_channels != 1) throw IoError("mask must be a P5 PGM: " + path);
    const size_t expected = static_cast<size_t>(h.width) * h.height;
    if (bytes.size() - h.payload_offset < expected)
        throw IoError("truncated PNM payload: " + path);
    RegionMask m;
    m.width = h.width;
    m.height = h.height;
    m.member.resize(expected);
    const uint8_t* src = bytes.data() + h.payload_offset;
    for (size_t i = 0; i < expected; ++i) m.member[i] = (src[i] > 127) ? 1 : 0;
    return m;
}

inline void store_mask(const RegionMask& mask, const std::string& path) {
    Raster r = make_raster(mask.width, mask.height, 1);
    for (size_t i = 0; i < mask.member.size(); ++i) r.data[i] = mask.member[i] ? 1.0 : 0.0;
    store_pnm(r, path);
}

} // namespace talkstab
