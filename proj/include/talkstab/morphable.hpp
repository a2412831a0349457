#pragma once

// Linear morphable face model: shape and texture as mean plus eigenvalue-
// scaled principal bases, coefficient fitting by least squares, shape/texture
// recombination, and orthographic projection of designated lip vertices.
//
// Model container: a JSON descriptor (counts, eigenvalues, landmark indices,
// sidecar names) plus raw little-endian float32 sidecars with header
// magic "MM3D", u32 version = 1, u32 vertex count n, u32 basis count M,
// then 3n mean values and M x 3n basis rows.

#include <bit>
#include <cstring>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "talkstab/core.hpp"
#include "talkstab/io_util.hpp"

namespace talkstab {

struct MorphableModel {
    int n = 0; // vertex count
    int m = 0; // basis count
    Eigen::VectorXd mean_shape;           // 3n
    Eigen::VectorXd mean_texture;         // 3n
    Eigen::MatrixXd shape_basis;          // 3n x M, unit-norm columns
    Eigen::MatrixXd texture_basis;        // 3n x M, unit-norm columns
    Eigen::VectorXd shape_eigenvalues;    // M, positive, non-increasing
    Eigen::VectorXd texture_eigenvalues;  // M
    std::vector<int> landmark_indices;    // lip vertices, projection order
};

struct FaceParams {
    Eigen::VectorXd alpha; // shape coefficients
    Eigen::VectorXd beta;  // texture coefficients
};

struct FaceSample {
    Eigen::VectorXd shape;   // 3n
    Eigen::VectorXd texture; // 3n
};

struct ShapeFit {
    Eigen::VectorXd alpha;
    double residual = 0.0; // norm of the component outside the basis span
};

inline void validate_model(const MorphableModel& model) {
    const int rows = 3 * model.n;
    if (model.n < 1 || model.m < 1) throw ValidationError("morphable model: bad counts");
    if (model.mean_shape.size() != rows || model.mean_texture.size() != rows ||
        model.shape_basis.rows() != rows || model.shape_basis.cols() != model.m ||
        model.texture_basis.rows() != rows || model.texture_basis.cols() != model.m ||
        model.shape_eigenvalues.size() != model.m || model.texture_eigenvalues.size() != model.m)
        throw ValidationError("morphable model: inconsistent dimensions");
    for (const auto* basis : {&model.shape_basis, &model.texture_basis})
        for (int j = 0; j < model.m; ++j)
            if (std::abs(basis->col(j).norm() - 1.0) > 1e-9)
                throw ValidationError("morphable model: basis vector not unit norm");
    for (const auto* eigen : {&model.shape_eigenvalues, &model.texture_eigenvalues})
        for (int j = 0; j < model.m; ++j) {
            if (!((*eigen)(j) > 0.0))
                throw ValidationError("morphable model: eigenvalues must be positive");
            if (j > 0 && (*eigen)(j) > (*eigen)(j - 1) + 1e-12)
                throw ValidationError("morphable model: eigenvalues must be non-increasing");
        }
    for (int idx : model.landmark_indices)
        if (idx < 0 || idx >= model.n)
            throw ValidationError("morphable model: landmark index out of range");
}

inline FaceSample synthesize(const MorphableModel& model, const FaceParams& params) {
    if (params.alpha.size() != model.m || params.beta.size() != model.m)
        throw ValidationError("synthesize: coefficient count mismatch");
    FaceSample s;
    s.shape = model.mean_shape +
              model.shape_basis * (model.shape_eigenvalues.cwiseProduct(params.alpha));
    s.texture = model.mean_texture +
                model.texture_basis * (model.texture_eigenvalues.cwiseProduct(params.beta));
    return s;
}

// Least-squares shape coefficients via the normal equations on the
// eigenvalue-scaled basis. Exact recovery when the observation lies in the
// affine span of the model.
inline ShapeFit fit_shape(const MorphableModel& model, const Eigen::VectorXd& observed_shape) {
    if (observed_shape.size() != 3 * model.n)
        throw ValidationError("fit_shape: observation size mismatch");
    const Eigen::MatrixXd scaled =
        model.shape_basis * model.shape_eigenvalues.asDiagonal();
    const Eigen::MatrixXd gram = scaled.transpose() * scaled;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > lmax * 1e-12))
        throw ValidationError("fit_shape: rank-deficient scaled basis");

    const Eigen::VectorXd rhs = scaled.transpose() * (observed_shape - model.mean_shape);
    ShapeFit fit;
    fit.alpha = gram.ldlt().solve(rhs);
    fit.residual = (observed_shape - model.mean_shape - scaled * fit.alpha).norm();
    return fit;
}

// Lip-source shape with identity-source texture.
inline FaceParams mix_parameters(const FaceParams& lip, const FaceParams& identity) {
    if (lip.alpha.size() != identity.alpha.size() || lip.beta.size() != identity.beta.size())
        throw ValidationError("mix_parameters: coefficient count mismatch");
    FaceParams mixed;
    mixed.alpha = lip.alpha;
    mixed.beta = identity.beta;
    return mixed;
}

// Orthographic (x, y) of the designated lip vertices; depth dropped.
inline LandmarkSet project_landmarks(const Eigen::VectorXd& shape, const MorphableModel& model) {
    if (shape.size() != 3 * model.n) throw ValidationError("project_landmarks: size mismatch");
    LandmarkSet set;
    set.dim = 2;
    set.coords.reserve(model.landmark_indices.size() * 2);
    for (int idx : model.landmark_indices) {
        if (idx < 0 || idx >= model.n)
            throw ValidationError("project_landmarks: index out of range");
        set.coords.push_back(shape(3 * idx + 0));
        set.coords.push_back(shape(3 * idx + 1));
    }
    return set;
}

// ---- container I/O ----

namespace detail {

inline constexpr char kSidecarMagic[4] = {'M', 'M', '3', 'D'};

inline void store_sidecar(const Eigen::VectorXd& mean, const Eigen::MatrixXd& basis,
                          const std::string& path) {
    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), kSidecarMagic, kSidecarMagic + 4);
    encode_u32le(1u, bytes); // version
    encode_u32le(static_cast<uint32_t>(mean.size() / 3), bytes);
    encode_u32le(static_cast<uint32_t>(basis.cols()), bytes);
    auto put = [&bytes](double v) {
        encode_u32le(std::bit_cast<uint32_t>(static_cast<float>(v)), bytes);
    };
    for (Eigen::Index i = 0; i < mean.size(); ++i) put(mean(i));
    for (Eigen::Index j = 0; j < basis.cols(); ++j)
        for (Eigen::Index i = 0; i < basis.rows(); ++i) put(basis(i, j));
    write_file_bytes(path, bytes);
}

inline void load_sidecar(const std::string& path, Eigen::VectorXd& mean,
                         Eigen::MatrixXd& basis) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kSidecarMagic, 4) != 0)
        throw IoError("bad sidecar magic (want MM3D): " + path);
    if (decode_u32le(bytes.data() + 4) != 1u)
        throw IoError("unsupported sidecar version: " + path);
    const uint32_t n = decode_u32le(bytes.data() + 8);
    const uint32_t m = decode_u32le(bytes.data() + 12);
    const size_t rows = static_cast<size_t>(n) * 3;
    const size_t expected = 16 + 4 * (rows + rows * m);
    if (n == 0 || m == 0 || bytes.size() < expected)
        throw IoError("truncated sidecar: " + path);
    const uint8_t* p = bytes.data() + 16;
    auto take = [&p]() {
        const float f = std::bit_cast<float>(decode_u32le(p));
        p += 4;
        return static_cast<double>(f);
    };
    mean.resize(static_cast<Eigen::Index>(rows));
    for (size_t i = 0; i < rows; ++i) mean(static_cast<Eigen::Index>(i)) = take();
    basis.resize(static_cast<Eigen::Index>(rows), m);
    for (uint32_t j = 0; j < m; ++j)
        for (size_t i = 0; i < rows; ++i) basis(static_cast<Eigen::Index>(i), j) = take();
    if (!mean.allFinite() || !basis.allFinite())
        throw IoError("non-finite entries in sidecar: " + path);
}

} // namespace detail

inline void store_model(const MorphableModel& model, const std::string& json_path) {
    validate_model(model);
    const auto dir = std::filesystem::path(json_path).parent_path();
    const auto stem = std::filesystem::path(json_path).stem().string();
    const std::string shape_name = stem + "_shape.mm3d";
    const std::string texture_name = stem + "_texture.mm3d";
    detail::store_sidecar(model.mean_shape, model.shape_basis, (dir / shape_name).string());
    detail::store_sidecar(model.mean_texture, model.texture_basis, (dir / texture_name).string());

    nlohmann::json j;
    j["n"] = model.n;
    j["M"] = model.m;
    auto eig = [](const Eigen::VectorXd& v) {
        auto arr = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(round_g9(v(i)));
        return arr;
    };
    j["shape_eigenvalues"] = eig(model.shape_eigenvalues);
    j["texture_eigenvalues"] = eig(model.texture_eigenvalues);
    j["landmark_indices"] = model.landmark_indices;
    j["shape_sidecar"] = shape_name;
    j["texture_sidecar"] = texture_name;
    const std::string text = j.dump(2) + "\n";
    write_file_bytes(json_path, std::vector<uint8_t>(text.begin(), text.end()));
}

inline MorphableModel load_model(const std::string& json_path) {
    const auto bytes = read_file_bytes(json_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid model JSON " + json_path + ": " + e.what());
    }
    MorphableModel model;
    try {
        model.n = j.at("n").get<int>();
        model.m = j.at("M").get<int>();
        model.landmark_indices = j.at("landmark_indices").get<std::vector<int>>();
        const auto se = j.at("shape_eigenvalues").get<std::vector<double>>();
        const auto te = j.at("texture_eigenvalues").get<std::vector<double>>();
        model.shape_eigenvalues = Eigen::Map<const Eigen::VectorXd>(se.data(), se.size());
        model.texture_eigenvalues = Eigen::Map<const Eigen::VectorXd>(te.data(), te.size());
        const auto dir = std::filesystem::path(json_path).parent_path();
        detail::load_sidecar((dir / j.at("shape_sidecar").get<std::string>()).string(),
                             model.mean_shape, model.shape_basis);
        detail::load_sidecar((dir / j.at("texture_sidecar").get<std::string>()).string(),
                             model.mean_texture, model.texture_basis);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad model descriptor " + json_path + ": " + e.what());
    }
    // Sidecars carry float32; renormalize the basis columns to recover the
    // unit-norm invariant before validation.
    for (auto* basis : {&model.shape_basis, &model.texture_basis})
        for (int c = 0; c < basis->cols(); ++c) {
            const double norm = basis->col(c).norm();
            if (!(norm > 0.5)) throw IoError("degenerate basis column in model " + json_path);
            basis->col(c) /= norm;
        }
    validate_model(model);
    return model;
}

// Synthesized shapes/textures persist as raw float32 arrays in the same
// sidecar container, with a basis count of zero.
inline void store_raw_array(const Eigen::VectorXd& values, const std::string& path) {
    if (values.size() % 3 != 0)
        throw ValidationError("store_raw_array: length must be a multiple of 3");
    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), detail::kSidecarMagic, detail::kSidecarMagic + 4);
    encode_u32le(1u, bytes);
    encode_u32le(static_cast<uint32_t>(values.size() / 3), bytes);
    encode_u32le(0u, bytes); // no basis rows
    for (Eigen::Index i = 0; i < values.size(); ++i)
        encode_u32le(std::bit_cast<uint32_t>(static_cast<float>(values(i))), bytes);
    write_file_bytes(path, bytes);
}

inline Eigen::VectorXd load_raw_array(const std::string& path) {
    Eigen::VectorXd values;
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), detail::kSidecarMagic, 4) != 0)
        throw IoError("bad sidecar magic (want MM3D): " + path);
    if (decode_u32le(bytes.data() + 4) != 1u)
        throw IoError("unsupported sidecar version: " + path);
    const uint32_t n = decode_u32le(bytes.data() + 8);
    const size_t rows = static_cast<size_t>(n) * 3;
    if (n == 0 || bytes.size() < 16 + 4 * rows) throw IoError("truncated sidecar: " + path);
    values.resize(static_cast<Eigen::Index>(rows));
    const uint8_t* p = bytes.data() + 16;
    for (size_t i = 0; i < rows; ++i, p += 4)
        values(static_cast<Eigen::Index>(i)) = std::bit_cast<float>(decode_u32le(p));
    if (!values.allFinite()) throw IoError("non-finite entries in sidecar: " + path);
    return values;
}

inline void store_face_params(const FaceParams& params, const std::string& path) {
    nlohmann::json j;
    auto arr = [](const Eigen::VectorXd& v) {
        auto a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(round_g9(v(i)));
        return a;
    };
    j["alpha"] = arr(params.alpha);
    j["beta"] = arr(params.beta);
    const std::string text = j.dump(2) + "\n";
    write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

inline FaceParams load_face_params(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
        const auto a = j.at("alpha").get<std::vector<double>>();
        const auto b = j.at("beta").get<std::vector<double>>();
        if (a.size() != b.size()) throw IoError("face params: alpha/beta length mismatch: " + path);
        FaceParams params;
        params.alpha = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
        params.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
        if (!params.alpha.allFinite() || !params.beta.allFinite())
            throw IoError("face params: non-finite coefficients: " + path);
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad face params " + path + ": " + e.what());
    }
}

} // namespace talkstab
