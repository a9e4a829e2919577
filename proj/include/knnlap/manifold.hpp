#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "knnlap/point_cloud.hpp"

namespace knnlap {

// Whether the population-bandwidth solver accepts correction scales r beyond
// the guaranteed threshold r0. Strict rejects r > r0 outright; AllowExtended
// solves whenever the defining polynomial stays strictly increasing on the
// solve interval (always true where Q(x) >= 0), which the experiments at
// k ~ N^(6/7) require.
enum class RegimePolicy { Strict, AllowExtended };

// Root of t^d (1 + r q t^2) = 1/p on the bracket
// ((2/(3p))^(1/d), (2/p)^(1/d)), found by bisection to absolute tolerance
// tol. The bracket is extended geometrically when the root falls outside it
// and the equation is still monotone; otherwise throws numerical_error.
double solve_population_bandwidth(double p, double q, double r, int d, double tol = 1e-12);

// Estimates the geometric correction omega of a closed unit-speed curve from
// the indicator-kernel arc integral eps^(-1/2) * |{s : |embed(t)-embed(s)|^2
// <= eps}| evaluated on an eps grid, by fitting m0 + eps (m2/2) omega plus a
// half-order correction term. embed must be 1-periodic; the superlevel set
// must be a single interval of half-width < r_max around t.
double omega_numeric(const std::function<Eigen::VectorXd(double)>& embed, double t,
                     const std::vector<double>& eps_grid, double r_max = 0.1);

// Closed 1D curve in R^4 ("curve-b1"): two frequency pairs (1, 5) with
// amplitudes (1, 2/5) scaled by 1/(2 pi sqrt(5)), giving an exactly
// unit-speed arclength parameterization, with the non-uniform density
// p(t) = 1 + amp4 sin(4 pi t) + amp6 sin(6 pi t).
class CurveManifold {
  public:
    static constexpr int kIntrinsicDim = 1;
    static constexpr int kAmbientDim = 4;

    explicit CurveManifold(double amp4 = 0.5, double amp6 = 0.25);

    double amp4() const { return amp4_; }
    double amp6() const { return amp6_; }

    Eigen::Vector4d embed(double t) const;

    double density(double t) const;
    double density_d1(double t) const;
    double density_d2(double t) const;

    // Test function f(t) = sin(2 pi (t - 0.1)) and derivatives.
    double test_function(double t) const;
    double test_function_d1(double t) const;
    double test_function_d2(double t) const;

    // Limiting operators applied to the test function, in arclength:
    // Delta_p f = f'' + f' p'/p;  L_p f = f'' + (1 - 2/d) f' p'/p.
    double delta_p_f(double t) const;
    double l_p_f(double t) const;

    // Geometric correction omega; constant 101 pi^2 / 5 for this embedding.
    // Override-able for synthetic setups.
    double omega() const { return omega_; }
    void set_omega(double v) { omega_ = v; }

    // Q(t) = (p''/p + omega) / (2 (d+2)).
    double q_correction(double t) const;

    // Grid-maximized constants (10^4 + 1 points).
    double q_sup() const { return q_sup_; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    double rho_min() const;  // (2/(3 p_max))^(1/d)
    double rho_max() const;  // (2/p_min)^(1/d)
    double r0() const { return r0_; }
    double r0_tilde() const { return r0_tilde_; }

    // rho-bar = p^(-1/d); the r -> 0 limit of the corrected bandwidth.
    double rho_bar(double t) const;

    // Corrected population bandwidth rho-bar_r(t).
    double population_bandwidth(double t, double r,
                                RegimePolicy policy = RegimePolicy::AllowExtended,
                                double tol = 1e-12) const;

    // i.i.d. draws from p via inverse CDF on a 2^16-interval grid with linear
    // interpolation; deterministic given seed. Intrinsic coords included.
    PointCloud sample(Eigen::Index n, std::uint64_t seed) const;

    // Draws restricted to the arc [t_lo, t_hi] (t_hi may exceed 1 to wrap),
    // with p renormalized on the interval.
    PointCloud sample_interval(Eigen::Index n, std::uint64_t seed, double t_lo,
                               double t_hi) const;

    // CDF of p on [0, 1] (trapezoid grid, normalized).
    double cdf(double t) const;
    // Mass of the arc [t_lo, t_hi] under p (t_hi may exceed 1).
    double interval_mass(double t_lo, double t_hi) const;

  private:
    double invert_cdf(double u) const;

    double amp4_, amp6_, omega_;
    std::vector<double> cdf_;  // knots at i / kCdfIntervals
    double p_min_ = 0, p_max_ = 0, q_sup_ = 0, r0_ = 0, r0_tilde_ = 0;
};

// Relative error of the empirical bandwidth against the corrected and
// uncorrected population bandwidths over a sampled cloud.
struct BandwidthErrorReport {
    double eps_rho_k = 0.0;        // sup_i |rho^ - rho-bar_rk| / rho-bar_rk
    double sup_uncorrected = 0.0;  // same against rho-bar = p^(-1/d)
    double mean_corrected = 0.0;
    double mean_uncorrected = 0.0;
    Eigen::VectorXd t, rho_hat, rho_bar, rho_bar_rk;
};

struct BandwidthProfile;  // knn.hpp

BandwidthErrorReport bandwidth_sup_error(const PointCloud& cloud, const BandwidthProfile& profile,
                                         const CurveManifold& mf,
                                         RegimePolicy policy = RegimePolicy::AllowExtended);

// t wrapped into [0, 1).
double wrap_unit(double t);

}  // namespace knnlap
