#include "knnlap/graph.hpp"

#include <cmath>

#include "knnlap/common.hpp"

namespace knnlap {

namespace {

void check_profile(const PointCloud& cloud, const BandwidthProfile& profile) {
    if (profile.n != cloud.size() || profile.r_hat.size() != cloud.size())
        throw invalid_parameter("bandwidth profile does not match cloud");
}

void check_bandwidths(const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (!(b(i) > 0.0))
            throw numerical_error(
                "degenerate bandwidth: some kNN distance is zero (duplicate points at small k)");
}

}  // namespace

AffinityMatrix affinity(const PointCloud& cloud, const BandwidthProfile& profile,
                        const KernelSpec& kernel, PhiRule phi, const BandwidthParam& param,
                        bool normalized, int threads, double drop_threshold) {
    cloud.validate();
    check_profile(cloud, profile);
    const Eigen::Index n = cloud.size();

    const bool practical = std::holds_alternative<Practical>(param);
    double eps = 0.0, sigma0 = 0.0, prefactor = 1.0;
    int d = profile.d;
    if (practical) {
        sigma0 = std::get<Practical>(param).sigma0;
        if (!(sigma0 > 0.0)) throw invalid_parameter("sigma0 must be positive");
    } else {
        eps = std::get<Theoretical>(param).eps;
        d = std::get<Theoretical>(param).d;
        if (!(eps > 0.0)) throw invalid_parameter("eps must be positive");
        if (d < 1) throw invalid_parameter("dimension d must be >= 1");
        prefactor = std::pow(eps, -0.5 * d);
    }
    const Eigen::VectorXd& band = practical ? profile.r_hat : profile.rho_hat;
    check_bandwidths(band);

    AffinityMatrix w;
    w.values.resize(n, n);
    w.param = param;
    w.normalized = normalized;
    w.kernel = kernel;
    w.phi = phi;

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = cloud.points;
    const int m = static_cast<int>(cloud.ambient_dim());

    // Upper triangle only; the (i, j) and (j, i) entries come from the same
    // arithmetic, so symmetry is exact.
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
        Eigen::Index i = static_cast<Eigen::Index>(row);
        const double* pi = &rm(i, 0);
        for (Eigen::Index j = i; j < n; ++j) {
            double dist2 = 0.0;
            const double* pj = &rm(j, 0);
            for (int c = 0; c < m; ++c) {
                double diff = pi[c] - pj[c];
                dist2 += diff * diff;
            }
            double ph = eval_phi(phi, band(i), band(j));
            double denom = practical ? sigma0 * sigma0 * ph * ph : eps * ph * ph;
            double v = practical ? eval_k0_shape(kernel, dist2 / denom)
                                 : prefactor * eval_k0(kernel, d, dist2 / denom);
            if (normalized) v /= practical ? sigma0 * sigma0 * ph * ph : ph * ph;
            if (drop_threshold > 0.0 && v < drop_threshold) v = 0.0;
            w.values(i, j) = v;
        }
    });
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) w.values(i, j) = w.values(j, i);
    return w;
}

Eigen::VectorXd degree(const AffinityMatrix& w) {
    Eigen::VectorXd deg = w.values.rowwise().sum();
    for (Eigen::Index i = 0; i < deg.size(); ++i)
        if (!(deg(i) > 0.0))
            throw numerical_error("isolated vertex: row " + std::to_string(i) +
                                  " of the affinity matrix sums to zero");
    return deg;
}

Eigen::MatrixXd laplacian_matrix(LaplacianKind kind, const AffinityMatrix& w,
                                 const BandwidthProfile& profile, const KernelMoments& moments,
                                 bool rescaled) {
    const Eigen::Index n = w.values.rows();
    if (profile.n != n) throw invalid_parameter("bandwidth profile does not match affinity");
    const bool tilde = (kind == LaplacianKind::UnTilde || kind == LaplacianKind::RwTilde);
    if (tilde != w.normalized)
        throw invalid_parameter(
            "laplacian kind incompatible with affinity normalization (Un/Rw need plain W, "
            "UnTilde/RwTilde need W~)");

    const bool practical = std::holds_alternative<Practical>(w.param);
    // sigma0^2 R_i^2 and eps rho_i^2 agree when eps = sigma0^2 r_k.
    Eigen::VectorXd scale2(n);
    double eps = 0.0;
    if (practical) {
        double s0 = std::get<Practical>(w.param).sigma0;
        scale2 = (s0 * s0) * profile.r_hat.array().square().matrix();
    } else {
        eps = std::get<Theoretical>(w.param).eps;
        scale2 = eps * profile.rho_hat.array().square().matrix();
    }
    check_bandwidths(scale2);

    Eigen::VectorXd deg = degree(w);  // also rejects isolated vertices
    Eigen::MatrixXd out;
    switch (kind) {
        case LaplacianKind::Rw:
        case LaplacianKind::RwTilde: {
            out = w.values.array().colwise() / deg.array();  // D^-1 W
            out = -out;
            out.diagonal().array() += 1.0;  // I - D^-1 W
            double ratio = moments.ratio();
            if (!(ratio > 0.0)) throw invalid_parameter("kernel moment ratio must be positive");
            for (Eigen::Index i = 0; i < n; ++i) out.row(i) *= -1.0 / (ratio * scale2(i));
            break;
        }
        case LaplacianKind::Un: {
            Eigen::MatrixXd lap = -w.values;
            lap.diagonal() += deg;  // D - W
            if (rescaled) {
                for (Eigen::Index i = 0; i < n; ++i)
                    lap.row(i) *= -1.0 / (static_cast<double>(n) * scale2(i));
            } else {
                if (practical)
                    throw invalid_parameter(
                        "non-rescaled Un requires the Theoretical parameterization");
                for (Eigen::Index i = 0; i < n; ++i)
                    lap.row(i) *= -2.0 / (moments.m2 * static_cast<double>(n) * eps *
                                          profile.rho_hat(i) * profile.rho_hat(i));
            }
            out = std::move(lap);
            break;
        }
        case LaplacianKind::UnTilde: {
            Eigen::MatrixXd lap = -w.values;
            lap.diagonal() += deg;  // D~ - W~
            if (rescaled) {
                lap *= -1.0 / static_cast<double>(n);
            } else {
                if (practical)
                    throw invalid_parameter(
                        "non-rescaled UnTilde requires the Theoretical parameterization");
                lap *= -2.0 / (moments.m2 * static_cast<double>(n) * eps);
            }
            out = std::move(lap);
            break;
        }
    }
    return out;
}

double laplacian_apply_at(LaplacianKind kind, const Eigen::VectorXd& x0, double f0,
                          const PointCloud& cloud, const Eigen::VectorXd& f_values,
                          const Eigen::VectorXd& r_hat, double r_hat_x0, const KernelSpec& kernel,
                          PhiRule phi, double sigma0, const KernelMoments& moments) {
    cloud.validate();
    const Eigen::Index n = cloud.size();
    if (f_values.size() != n) throw invalid_parameter("f_values does not align with cloud");
    if (r_hat.size() != n) throw invalid_parameter("r_hat does not align with cloud");
    if (x0.size() != cloud.ambient_dim()) throw invalid_parameter("x0 dimension mismatch");
    if (!(sigma0 > 0.0)) throw invalid_parameter("sigma0 must be positive");
    if (!(r_hat_x0 > 0.0)) throw numerical_error("degenerate bandwidth: R^(x0) is zero");
    check_bandwidths(r_hat);

    const bool tilde = (kind == LaplacianKind::UnTilde || kind == LaplacianKind::RwTilde);
    const double s2 = sigma0 * sigma0;

    double sum_w = 0.0, sum_wf = 0.0, sum_wdiff = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        double dist2 = (cloud.points.row(j).transpose() - x0).squaredNorm();
        double ph = eval_phi(phi, r_hat_x0, r_hat(j));
        double v = eval_k0_shape(kernel, dist2 / (s2 * ph * ph));
        if (tilde) v /= s2 * ph * ph;
        sum_w += v;
        sum_wf += v * f_values(j);
        sum_wdiff += v * (f_values(j) - f0);
    }
    if (!(sum_w > 0.0))
        throw numerical_error("empty neighborhood: all affinity weights at x0 are zero");

    switch (kind) {
        case LaplacianKind::Rw:
        case LaplacianKind::RwTilde:
            return (sum_wf / sum_w - f0) / (moments.ratio() * s2 * r_hat_x0 * r_hat_x0);
        case LaplacianKind::Un:
            return sum_wdiff / (static_cast<double>(n) * s2 * r_hat_x0 * r_hat_x0);
        case LaplacianKind::UnTilde:
            return sum_wdiff / static_cast<double>(n);
    }
    throw invalid_parameter("unknown laplacian kind");
}

}  // namespace knnlap
