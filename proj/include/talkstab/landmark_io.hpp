#pragma once

// Landmark track CSV: header "frame,point,x,y[,z]", rows sorted by
// (frame, point), frame indices contiguous from 0, uniform point count.

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "talkstab/core.hpp"
#include "talkstab/io_util.hpp"

namespace talkstab {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
    }
    return fields;
}

inline double parse_number(const std::string& s, const std::string& path) {
    if (s.empty()) throw IoError("non-numeric CSV field in " + path);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw IoError("non-numeric CSV field '" + s + "' in " + path);
    return v;
}

} // namespace detail

inline LandmarkTrack load_landmarks(const std::string& path, const std::string& scheme = "") {
    const auto bytes = read_file_bytes(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty landmark CSV: " + path);

    const auto header = detail::split_csv_line(line);
    int dim;
    if (header.size() == 4 && header[0] == "frame" && header[1] == "point" &&
        header[2] == "x" && header[3] == "y") {
        dim = 2;
    } else if (header.size() == 5 && header[0] == "frame" && header[1] == "point" &&
               header[2] == "x" && header[3] == "y" && header[4] == "z") {
        dim = 3;
    } else {
        throw IoError("bad landmark CSV header (want frame,point,x,y[,z]): " + path);
    }

    LandmarkTrack track;
    track.dim = dim;
    track.scheme = scheme;

    long expect_frame = 0, expect_point = 0;
    long points_per_frame = -1;
    LandmarkSet current;
    current.dim = dim;

    auto finish_frame = [&]() {
        const long points = static_cast<long>(current.points());
        if (points_per_frame < 0) {
            points_per_frame = points;
        } else if (points != points_per_frame) {
            throw IoError("ragged point counts across frames in " + path);
        }
        track.frames.push_back(std::move(current));
        current = LandmarkSet{};
        current.dim = dim;
    };

    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != 2 + dim)
            throw IoError("bad landmark CSV row arity in " + path);
        const long frame = std::lround(detail::parse_number(fields[0], path));
        const long point = std::lround(detail::parse_number(fields[1], path));
        if (frame < expect_frame) throw IoError("rows not sorted by (frame, point) in " + path);
        if (frame == expect_frame + 1) {
            if (current.points() == 0)
                throw IoError("frame gap in landmark CSV (frames must start at 0): " + path);
            finish_frame();
            expect_frame = frame;
            expect_point = 0;
        } else if (frame > expect_frame) {
            throw IoError("frame gap in landmark CSV: " + path);
        }
        if (point != expect_point)
            throw IoError("point indices not contiguous in landmark CSV: " + path);
        for (int k = 0; k < dim; ++k) {
            const double v = detail::parse_number(fields[2 + k], path);
            if (!std::isfinite(v)) throw IoError("non-finite landmark coordinate in " + path);
            current.coords.push_back(v);
        }
        ++expect_point;
    }
    if (current.points() > 0) finish_frame();
    if (track.frames.empty()) throw IoError("landmark CSV has no data rows: " + path);
    return track;
}

inline void store_landmarks(const LandmarkTrack& track, const std::string& path) {
    std::string out = track.dim == 3 ? "frame,point,x,y,z\n" : "frame,point,x,y\n";
    for (size_t f = 0; f < track.frames.size(); ++f) {
        const LandmarkSet& set = track.frames[f];
        for (size_t p = 0; p < set.points(); ++p) {
            out += std::to_string(f) + "," + std::to_string(p) + "," + format_g9(set.x(p)) +
                   "," + format_g9(set.y(p));
            if (track.dim == 3) out += "," + format_g9(set.z(p));
            out += "\n";
        }
    }
    write_file_bytes(path, std::vector<uint8_t>(out.begin(), out.end()));
}

} // namespace talkstab
