#pragma once

#include <Eigen/Dense>
#include <variant>

#include "knnlap/kernels.hpp"
#include "knnlap/knn.hpp"
#include "knnlap/point_cloud.hpp"

namespace knnlap {

// Bandwidth parameterization of the affinity. Theoretical carries the kernel
// bandwidth eps and the intrinsic dimension (for the eps^(-d/2) prefactor and
// the rho^-based denominators); Practical carries sigma0 and uses the raw kNN
// distances R^, with normalization prefactors dropped. For homogeneous phi the
// two coincide up to a constant when eps = sigma0^2 r_k.
struct Theoretical {
    double eps;
    int d;
};
struct Practical {
    double sigma0;
};
using BandwidthParam = std::variant<Theoretical, Practical>;

struct AffinityMatrix {
    Eigen::MatrixXd values;  // N x N, symmetric
    BandwidthParam param;
    bool normalized = false;  // plain W vs phi^2-normalized W~
    KernelSpec kernel;
    PhiRule phi = PhiRule::GeometricMean;
};

enum class LaplacianKind { Un, Rw, UnTilde, RwTilde };

// Affinity matrix:
//   Theoretical(eps, d): W_ij = eps^(-d/2) k0(|xi-xj|^2 / (eps phi(rho_i, rho_j)^2))
//   Practical(sigma0):   W_ij = k0(|xi-xj|^2 / (sigma0^2 phi(R_i, R_j)^2)),
//                        ambient normalization prefactor dropped.
// normalized divides entry (i,j) by phi(rho_i,rho_j)^2 (theoretical) or
// sigma0^2 phi(R_i,R_j)^2 (practical). Entries below drop_threshold are set
// to zero when drop_threshold > 0 (off by default).
AffinityMatrix affinity(const PointCloud& cloud, const BandwidthProfile& profile,
                        const KernelSpec& kernel, PhiRule phi, const BandwidthParam& param,
                        bool normalized = false, int threads = 1, double drop_threshold = 0.0);

// Row sums. Throws numerical_error on a zero row (isolated vertex).
Eigen::VectorXd degree(const AffinityMatrix& w);

// Graph Laplacian matrices; all kinds annihilate constants.
//   Rw:      -(2 m0 / m2) diag(1/(eps rho_i^2)) (I - D^-1 W)   [or sigma0^2 R_i^2]
//   RwTilde: same with W~, D~.
//   Un:      rescaled: -(1/N) diag(1/(sigma0^2 R_i^2)) (D - W)
//            full (Theoretical only): -(2/(m2 N eps)) diag(1/rho_i^2) (D - W)
//   UnTilde: rescaled: -(1/N) (D~ - W~)
//            full (Theoretical only): -(2/(m2 N eps)) (D~ - W~)
// kind must match w.normalized (Un/Rw with plain W; UnTilde/RwTilde with W~).
Eigen::MatrixXd laplacian_matrix(LaplacianKind kind, const AffinityMatrix& w,
                                 const BandwidthProfile& profile, const KernelMoments& moments,
                                 bool rescaled = true);

// Out-of-sample operator value at x0 (sigma0 parameterization; x0 is a query,
// not a dataset member). r_hat_x0 is the kNN distance of x0 against the
// cloud; f_values aligns with cloud rows. Rw kinds use the ratio form divided
// by m2/(2 m0); Un kinds use the d-free rescaled sums.
double laplacian_apply_at(LaplacianKind kind, const Eigen::VectorXd& x0, double f0,
                          const PointCloud& cloud, const Eigen::VectorXd& f_values,
                          const Eigen::VectorXd& r_hat, double r_hat_x0, const KernelSpec& kernel,
                          PhiRule phi, double sigma0, const KernelMoments& moments);

}  // namespace knnlap
