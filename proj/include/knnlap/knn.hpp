#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "knnlap/point_cloud.hpp"

namespace knnlap {

enum class KnnMethod { BruteForce, Indexed };

// Per-point kNN bandwidth data tying R-hat, rho-hat and the scalars k, N, d,
// r_k together. rho_hat = r_hat / sqrt(r_k) with r_k = (k / (alpha_d N))^(2/d).
struct BandwidthProfile {
    Eigen::VectorXd r_hat;    // kNN distances R^(x_i)
    Eigen::VectorXd rho_hat;  // rescaled empirical bandwidth
    int k = 0;
    Eigen::Index n = 0;
    int d = 0;
    double r_k = 0.0;
    double sqrt_r_k = 0.0;
};

// Exact kd-tree over a fixed cloud. Query results agree exactly (bitwise on
// the returned distance) with the brute-force path: pruning uses
// coordinate-plane bounds that can never discard a point whose computed
// squared distance is below the current k-th candidate.
class KdTree {
  public:
    explicit KdTree(const Eigen::MatrixXd& points);
    ~KdTree();
    KdTree(KdTree&&) noexcept;
    KdTree& operator=(KdTree&&) noexcept;

    // Distance from query to its k-th nearest point in the cloud (tie values
    // collapse; a zero self-distance counts when the query is a data point).
    double knn_distance(const Eigen::VectorXd& query, int k) const;

    // The k smallest distances in nondecreasing order (for multi-k reuse).
    std::vector<double> knn_distances(const Eigen::VectorXd& query, int k) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Smallest radius r such that at least k cloud points lie within distance r
// of the query (Euclidean; self counts when query coincides with a point).
double knn_distance(const PointCloud& cloud, const Eigen::VectorXd& query, int k);

// R^(x_i) for every cloud point. Indexed uses a kd-tree and must agree
// exactly with BruteForce. threads <= 0 means auto.
Eigen::VectorXd knn_all(const PointCloud& cloud, int k, KnnMethod method = KnnMethod::Indexed,
                        int threads = 1);

// Full bandwidth profile: R^ via knn_all, rho^ = R^ / sqrt(r_k),
// r_k = (k/(alpha_d N))^(2/d).
BandwidthProfile bandwidth_profile(const PointCloud& cloud, int k, int d,
                                   KnnMethod method = KnnMethod::Indexed, int threads = 1);

}  // namespace knnlap
