#pragma once

#include <Eigen/Dense>
#include <optional>

namespace knnlap {

// N points in R^m, optionally with intrinsic (arclength) coordinates in
// [0, 1) for points sampled from an analytic manifold.
struct PointCloud {
    Eigen::MatrixXd points;                    // N x m
    std::optional<Eigen::VectorXd> intrinsic;  // length N when present

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index ambient_dim() const { return points.cols(); }

    // Throws invalid_parameter on non-finite coordinates, empty cloud, or an
    // intrinsic vector of the wrong length / out of [0, 1).
    void validate() const;
};

}  // namespace knnlap
