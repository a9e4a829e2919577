#include "knnlap/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "knnlap/common.hpp"
#include "knnlap/kernels.hpp"

namespace knnlap {

namespace {

// Shared by the brute-force and indexed paths so both produce bit-identical
// distance values: coordinates are accumulated in index order.
inline double squared_distance(const double* a, const double* b, int m) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
        double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

// Fixed-capacity max-heap over squared distances; top() is the current k-th
// smallest candidate.
class BoundedMaxHeap {
  public:
    explicit BoundedMaxHeap(int capacity) : capacity_(static_cast<std::size_t>(capacity)) {
        data_.reserve(capacity_);
    }
    bool full() const { return data_.size() == capacity_; }
    double top() const { return data_.front(); }
    void offer(double d2) {
        if (data_.size() < capacity_) {
            data_.push_back(d2);
            std::push_heap(data_.begin(), data_.end());
        } else if (d2 < data_.front()) {
            std::pop_heap(data_.begin(), data_.end());
            data_.back() = d2;
            std::push_heap(data_.begin(), data_.end());
        }
    }
    std::vector<double> sorted() && {
        std::sort(data_.begin(), data_.end());
        return std::move(data_);
    }

  private:
    std::size_t capacity_;
    std::vector<double> data_;
};

void check_query(const Eigen::VectorXd& query, Eigen::Index m) {
    if (query.size() != m) throw invalid_parameter("query dimension does not match cloud");
    if (!query.allFinite()) throw invalid_parameter("query has non-finite coordinates");
}

}  // namespace

struct KdTree::Impl {
    struct Node {
        double split = 0.0;
        int axis = -1;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into pts_
        bool leaf() const { return axis < 0; }
    };

    static constexpr int kLeafSize = 16;

    int m = 0;
    std::vector<double> pts;  // reordered, row-major
    std::vector<Node> nodes;

    explicit Impl(const Eigen::MatrixXd& points) {
        m = static_cast<int>(points.cols());
        const int n = static_cast<int>(points.rows());
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::vector<double> scratch(static_cast<std::size_t>(n) * m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) scratch[static_cast<std::size_t>(i) * m + j] = points(i, j);
        nodes.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 2));
        build(scratch, idx, 0, n);
        pts.resize(scratch.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                pts[static_cast<std::size_t>(i) * m + j] = scratch[static_cast<std::size_t>(idx[i]) * m + j];
    }

    int build(const std::vector<double>& raw, std::vector<int>& idx, int begin, int end) {
        int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (end - begin <= kLeafSize) {
            nodes[node_id].begin = begin;
            nodes[node_id].end = end;
            return node_id;
        }
        // Split along the axis with the widest extent over this range.
        int axis = 0;
        double best_spread = -1.0;
        for (int j = 0; j < m; ++j) {
            double lo = raw[static_cast<std::size_t>(idx[begin]) * m + j];
            double hi = lo;
            for (int i = begin + 1; i < end; ++i) {
                double v = raw[static_cast<std::size_t>(idx[i]) * m + j];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = j;
            }
        }
        int mid = begin + (end - begin) / 2;
        std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                         [&](int a, int b) {
                             return raw[static_cast<std::size_t>(a) * m + axis] <
                                    raw[static_cast<std::size_t>(b) * m + axis];
                         });
        double split = raw[static_cast<std::size_t>(idx[mid]) * m + axis];
        nodes[node_id].axis = axis;
        nodes[node_id].split = split;
        int left = build(raw, idx, begin, mid);
        int right = build(raw, idx, mid, end);
        nodes[node_id].left = left;
        nodes[node_id].right = right;
        return node_id;
    }

    void search(int node_id, const double* q, BoundedMaxHeap& heap) const {
        const Node& node = nodes[node_id];
        if (node.leaf()) {
            for (int i = node.begin; i < node.end; ++i)
                heap.offer(squared_distance(q, &pts[static_cast<std::size_t>(i) * m], m));
            return;
        }
        double diff = q[node.axis] - node.split;
        int near = diff <= 0.0 ? node.left : node.right;
        int far = diff <= 0.0 ? node.right : node.left;
        search(near, q, heap);
        // Points in the far subtree satisfy |x[axis] - q[axis]| >= |diff|, so
        // their computed squared distance is >= diff*diff under IEEE
        // round-to-nearest; pruning on > keeps the k-th value exact.
        if (!heap.full() || diff * diff <= heap.top()) search(far, q, heap);
    }
};

KdTree::KdTree(const Eigen::MatrixXd& points) : impl_(std::make_unique<Impl>(points)) {
    if (points.rows() < 1) throw invalid_parameter("kd-tree needs at least one point");
}

KdTree::~KdTree() = default;
KdTree::KdTree(KdTree&&) noexcept = default;
KdTree& KdTree::operator=(KdTree&&) noexcept = default;

double KdTree::knn_distance(const Eigen::VectorXd& query, int k) const {
    check_query(query, impl_->m);
    Eigen::Index n = static_cast<Eigen::Index>(impl_->pts.size()) / impl_->m;
    if (k < 1 || k > n) throw invalid_parameter("knn_distance requires 1 <= k <= N");
    BoundedMaxHeap heap(k);
    impl_->search(0, query.data(), heap);
    return std::sqrt(heap.top());
}

std::vector<double> KdTree::knn_distances(const Eigen::VectorXd& query, int k) const {
    check_query(query, impl_->m);
    Eigen::Index n = static_cast<Eigen::Index>(impl_->pts.size()) / impl_->m;
    if (k < 1 || k > n) throw invalid_parameter("knn_distances requires 1 <= k <= N");
    BoundedMaxHeap heap(k);
    impl_->search(0, query.data(), heap);
    auto d2 = std::move(heap).sorted();
    for (double& v : d2) v = std::sqrt(v);
    return d2;
}

double knn_distance(const PointCloud& cloud, const Eigen::VectorXd& query, int k) {
    cloud.validate();
    check_query(query, cloud.ambient_dim());
    const Eigen::Index n = cloud.size();
    if (k < 1 || k > n) throw invalid_parameter("knn_distance requires 1 <= k <= N");
    const int m = static_cast<int>(cloud.ambient_dim());
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        d2[static_cast<std::size_t>(i)] = squared_distance(query.data(), cloud.points.row(i).data(), m);
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    return std::sqrt(d2[static_cast<std::size_t>(k - 1)]);
}

Eigen::VectorXd knn_all(const PointCloud& cloud, int k, KnnMethod method, int threads) {
    cloud.validate();
    const Eigen::Index n = cloud.size();
    if (n < 2) throw invalid_parameter("knn_all requires N >= 2");
    if (k < 1 || k >= n) throw invalid_parameter("knn_all requires 1 <= k < N");

    // Row-major copy so each query touches contiguous memory.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = cloud.points;
    const int m = static_cast<int>(cloud.ambient_dim());
    Eigen::VectorXd out(n);

    if (method == KnnMethod::BruteForce) {
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
            const double* q = &rm(static_cast<Eigen::Index>(i), 0);
            std::vector<double> d2(static_cast<std::size_t>(n));
            for (Eigen::Index j = 0; j < n; ++j)
                d2[static_cast<std::size_t>(j)] = squared_distance(q, &rm(j, 0), m);
            std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
            out(static_cast<Eigen::Index>(i)) = std::sqrt(d2[static_cast<std::size_t>(k - 1)]);
        });
    } else {
        KdTree tree(cloud.points);
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
            out(static_cast<Eigen::Index>(i)) =
                tree.knn_distance(cloud.points.row(static_cast<Eigen::Index>(i)).transpose(), k);
        });
    }
    return out;
}

BandwidthProfile bandwidth_profile(const PointCloud& cloud, int k, int d, KnnMethod method,
                                   int threads) {
    if (d < 1) throw invalid_parameter("intrinsic dimension d must be >= 1");
    BandwidthProfile prof;
    prof.r_hat = knn_all(cloud, k, method, threads);
    prof.k = k;
    prof.n = cloud.size();
    prof.d = d;
    double ratio = static_cast<double>(k) / (unit_ball_volume(d) * static_cast<double>(prof.n));
    prof.sqrt_r_k = std::pow(ratio, 1.0 / d);
    prof.r_k = prof.sqrt_r_k * prof.sqrt_r_k;
    prof.rho_hat = prof.r_hat / prof.sqrt_r_k;
    return prof;
}

}  // namespace knnlap
