#pragma once

// Pairwise Procrustes alignment of landmark sets (2D or 3D): center both
// sets, optionally normalize to unit centroid size, rotate by the polar
// factor of the cross-covariance with reflections excluded, and report the
// residual sum of squares as the disparity.

#include <Eigen/Dense>

#include "talkstab/core.hpp"

namespace talkstab {

struct AlignmentResult {
    double disparity = 0.0;
    Eigen::MatrixXd rotation;    // d x d, orthogonal, det +1; maps b onto a
    double scale = 1.0;          // full similarity scale from b to a
    Eigen::VectorXd translation; // c_a - scale * R * c_b
};

namespace detail {

inline Eigen::MatrixXd landmarks_to_matrix(const LandmarkSet& set) {
    const size_t p = set.points();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p), set.dim);
    for (size_t i = 0; i < p; ++i)
        for (int k = 0; k < set.dim; ++k) m(static_cast<Eigen::Index>(i), k) = set.coords[i * set.dim + k];
    return m;
}

// Best proper rotation R minimizing ||A - B * R^T||_F (rows are points).
inline Eigen::MatrixXd optimal_rotation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd cross = a.transpose() * b; // d x d
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd u = svd.matrixU();
    Eigen::MatrixXd v = svd.matrixV();
    Eigen::MatrixXd r = u * v.transpose();
    if (r.determinant() < 0) { // exclude reflections
        u.col(u.cols() - 1) *= -1.0;
        r = u * v.transpose();
    }
    return r;
}

} // namespace detail

// With normalize_scale (the default) both sets are scaled to unit centroid
// size before alignment, the standard Procrustes disparity; without it the
// alignment is strictly rigid (rotation + translation) in original units.
inline AlignmentResult procrustes_disparity(const LandmarkSet& a, const LandmarkSet& b,
                                            bool normalize_scale = true) {
    if (a.dim != b.dim) throw ValidationError("procrustes: dimensionality mismatch");
    if (a.points() != b.points()) throw ValidationError("procrustes: point count mismatch");
    if (a.points() < 2) throw ValidationError("procrustes: need at least 2 points");

    Eigen::MatrixXd ma = detail::landmarks_to_matrix(a);
    Eigen::MatrixXd mb = detail::landmarks_to_matrix(b);
    const Eigen::RowVectorXd ca = ma.colwise().mean();
    const Eigen::RowVectorXd cb = mb.colwise().mean();
    ma.rowwise() -= ca;
    mb.rowwise() -= cb;
    const double na = ma.norm();
    const double nb = mb.norm();
    if (!(na > 0.0) || !(nb > 0.0))
        throw ValidationError("procrustes: degenerate set (all points coincident)");

    AlignmentResult result;
    if (normalize_scale) {
        ma /= na;
        mb /= nb;
        const Eigen::MatrixXd r = detail::optimal_rotation(ma, mb);
        // optimal relative scale for unit-norm sets; kept positive
        double s = (ma.transpose() * mb * r.transpose()).trace();
        if (s < 1e-12) s = 1e-12;
        result.disparity = (ma - s * mb * r.transpose()).squaredNorm();
        result.rotation = r;
        result.scale = s * na / nb;
    } else {
        const Eigen::MatrixXd r = detail::optimal_rotation(ma, mb);
        result.disparity = (ma - mb * r.transpose()).squaredNorm();
        result.rotation = r;
        result.scale = 1.0;
    }
    result.translation = ca.transpose() - result.scale * result.rotation * cb.transpose();
    return result;
}

} // namespace talkstab
