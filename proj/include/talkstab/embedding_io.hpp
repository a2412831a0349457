#pragma once

// Embedding container: JSON object {"dim": d, "vectors": [[...], ...]}.

#include <string>
#include <vector>

#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/io_util.hpp"

namespace talkstab {

inline std::vector<EmbeddingVector> parse_embeddings_json(const nlohmann::json& doc,
                                                          const std::string& origin) {
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("vectors"))
        throw IoError("embedding JSON must be an object with 'dim' and 'vectors': " + origin);
    if (!doc["dim"].is_number_integer() || doc["dim"].get<long>() < 1)
        throw IoError("embedding 'dim' must be a positive integer: " + origin);
    const size_t dim = doc["dim"].get<size_t>();
    if (!doc["vectors"].is_array())
        throw IoError("embedding 'vectors' must be a list: " + origin);

    std::vector<EmbeddingVector> out;
    for (const auto& row : doc["vectors"]) {
        if (!row.is_array() || row.size() != dim)
            throw IoError("dim mismatch in embedding JSON: " + origin);
        EmbeddingVector e;
        e.values.reserve(dim);
        for (const auto& v : row) {
            if (!v.is_number()) throw IoError("non-numeric embedding entry: " + origin);
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw IoError("non-finite embedding entry: " + origin);
            e.values.push_back(x);
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<EmbeddingVector> load_embeddings(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_embeddings_json(doc, path);
}

inline void store_embeddings(const std::vector<EmbeddingVector>& vectors,
                             const std::string& path) {
    if (vectors.empty()) throw ValidationError("store_embeddings: empty list");
    const size_t dim = vectors.front().dim();
    nlohmann::json doc;
    doc["dim"] = dim;
    auto rows = nlohmann::json::array();
    for (const auto& e : vectors) {
        if (e.dim() != dim) throw ValidationError("store_embeddings: ragged vectors");
        auto row = nlohmann::json::array();
        for (double v : e.values) {
            if (!std::isfinite(v)) throw ValidationError("store_embeddings: non-finite entry");
            row.push_back(round_g9(v));
        }
        rows.push_back(std::move(row));
    }
    doc["vectors"] = std::move(rows);
    const std::string text = doc.dump(2) + "\n";
    write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

} // namespace talkstab
