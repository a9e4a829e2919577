#include "knnlap/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "knnlap/common.hpp"
#include "knnlap/knn.hpp"

namespace knnlap {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// 1/(2 pi sqrt(5)); with second-pair amplitude 2/5 the speed is exactly 1:
// (1/5) + (2/5)^2 * 25 / 5 = 1/5 + 4/5.
const double kEmbedScale = 1.0 / (kTwoPi * std::sqrt(5.0));
constexpr double kSecondPairAmp = 0.4;
constexpr int kCdfIntervals = 1 << 16;
constexpr int kConstGridPoints = 10000;
}  // namespace

double wrap_unit(double t) {
    double w = t - std::floor(t);
    return w < 1.0 ? w : 0.0;
}

double solve_population_bandwidth(double p, double q, double r, int d, double tol) {
    if (!(p > 0.0)) throw invalid_parameter("density value must be positive");
    if (d < 1) throw invalid_parameter("dimension d must be >= 1");
    if (!(r >= 0.0)) throw invalid_parameter("correction scale r must be >= 0");
    if (!(tol > 0.0)) throw invalid_parameter("tolerance must be positive");
    if (r == 0.0 || q == 0.0) return std::pow(p, -1.0 / d);

    const double inv_p = 1.0 / p;
    auto F = [&](double x) { return std::pow(x, d) * (1.0 + r * q * x * x) - inv_p; };
    // F' = x^(d-1) (d + (d+2) r q x^2); increasing iff this stays positive.
    auto monotone_at = [&](double x) { return d + (d + 2) * r * q * x * x > 0.0; };

    double lo = std::pow(2.0 / (3.0 * p), 1.0 / d);
    double hi = std::pow(2.0 / p, 1.0 / d);

    int guard = 0;
    while (F(lo) > 0.0) {
        // Root below the Lemma bracket (large r with q > 0); F(0+) < 0 and F
        // is increasing on (0, lo], so halving must cross it.
        lo *= 0.5;
        if (++guard > 1100) throw numerical_error("population bandwidth: bracket extension failed");
    }
    guard = 0;
    while (F(hi) < 0.0) {
        if (!monotone_at(hi))
            throw numerical_error(
                "population bandwidth out of regime: polynomial not monotone (r too large for "
                "negative Q)");
        hi *= 1.25;
        if (++guard > 200) throw numerical_error("population bandwidth: no sign change found");
    }
    if (!monotone_at(hi))
        throw numerical_error("population bandwidth out of regime: root not certified unique");

    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (F(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double omega_numeric(const std::function<Eigen::VectorXd(double)>& embed, double t,
                     const std::vector<double>& eps_grid, double r_max) {
    if (eps_grid.size() < 3)
        throw numerical_error("omega_numeric: need at least 3 epsilon grid points");
    double lo_eps = *std::min_element(eps_grid.begin(), eps_grid.end());
    double hi_eps = *std::max_element(eps_grid.begin(), eps_grid.end());
    if (!(lo_eps > 0.0)) throw invalid_parameter("omega_numeric: epsilons must be positive");
    if (hi_eps < 2.0 * lo_eps)
        throw numerical_error("omega_numeric: epsilon grid too coarse (span must cover a factor 2)");

    const Eigen::VectorXd center = embed(t);
    auto sqdist = [&](double s) { return (embed(s) - center).squaredNorm(); };
    // Half-width r on one side where the squared chord first reaches eps.
    auto crossing = [&](double sign, double eps) {
        double hi = r_max;
        if (!(sqdist(t + sign * hi) > eps))
            throw numerical_error("omega_numeric: r_max too small for requested epsilon");
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            double mid = 0.5 * (lo + hi);
            if (sqdist(t + sign * mid) < eps)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    // G(eps) = (r+ + r-)/sqrt(eps) = m0 + eps (m2/2) omega + O(eps^(3/2)),
    // with m0 = 2 and m2 = 2/3 for the d=1 indicator kernel. Regress
    // (G - m0)/eps on (1, sqrt(eps)) so the half-order term cannot bias the
    // omega coefficient.
    const double m0 = 2.0, m2 = 2.0 / 3.0;
    const int n = static_cast<int>(eps_grid.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        double eps = eps_grid[static_cast<std::size_t>(i)];
        double g = (crossing(+1.0, eps) + crossing(-1.0, eps)) / std::sqrt(eps);
        A(i, 0) = 1.0;
        A(i, 1) = std::sqrt(eps);
        y(i) = (g - m0) / eps;
    }
    Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
    return 2.0 * coef(0) / m2;
}

CurveManifold::CurveManifold(double amp4, double amp6)
    : amp4_(amp4), amp6_(amp6), omega_(101.0 * kPi * kPi / 5.0) {
    // Constants by grid maximization.
    p_min_ = density(0.0);
    p_max_ = p_min_;
    q_sup_ = 0.0;
    for (int i = 0; i <= kConstGridPoints; ++i) {
        double t = static_cast<double>(i) / kConstGridPoints;
        double p = density(t);
        p_min_ = std::min(p_min_, p);
        p_max_ = std::max(p_max_, p);
    }
    if (!(p_min_ > 0.0)) throw invalid_parameter("density coefficients make p non-positive");
    for (int i = 0; i <= kConstGridPoints; ++i) {
        double t = static_cast<double>(i) / kConstGridPoints;
        q_sup_ = std::max(q_sup_, std::abs(q_correction(t)));
    }
    const int d = kIntrinsicDim;
    double rmax = rho_max();
    double rmin = rho_min();
    r0_ = (d + 2) / (2.0 * d * (q_sup_ + 1.0) * rmax * rmax);
    r0_tilde_ = d * std::pow(rmin, d - 1) / (2.0 * (d + 2) * (q_sup_ + 1.0) * std::pow(rmax, d + 1));

    // CDF knots (trapezoid), normalized so the last knot is exactly 1.
    cdf_.resize(kCdfIntervals + 1);
    cdf_[0] = 0.0;
    double prev = density(0.0);
    for (int i = 1; i <= kCdfIntervals; ++i) {
        double t = static_cast<double>(i) / kCdfIntervals;
        double cur = density(t);
        cdf_[static_cast<std::size_t>(i)] =
            cdf_[static_cast<std::size_t>(i - 1)] + 0.5 * (prev + cur) / kCdfIntervals;
        prev = cur;
    }
    double total = cdf_.back();
    for (double& v : cdf_) v /= total;
}

Eigen::Vector4d CurveManifold::embed(double t) const {
    if (!std::isfinite(t)) throw invalid_parameter("embed: t must be finite");
    double a = kTwoPi * t;
    Eigen::Vector4d out;
    out << std::cos(a), std::sin(a), kSecondPairAmp * std::cos(5.0 * a),
        kSecondPairAmp * std::sin(5.0 * a);
    return kEmbedScale * out;
}

double CurveManifold::density(double t) const {
    return 1.0 + amp4_ * std::sin(4.0 * kPi * t) + amp6_ * std::sin(6.0 * kPi * t);
}

double CurveManifold::density_d1(double t) const {
    return 4.0 * kPi * amp4_ * std::cos(4.0 * kPi * t) + 6.0 * kPi * amp6_ * std::cos(6.0 * kPi * t);
}

double CurveManifold::density_d2(double t) const {
    return -16.0 * kPi * kPi * amp4_ * std::sin(4.0 * kPi * t) -
           36.0 * kPi * kPi * amp6_ * std::sin(6.0 * kPi * t);
}

double CurveManifold::test_function(double t) const { return std::sin(kTwoPi * (t - 0.1)); }

double CurveManifold::test_function_d1(double t) const {
    return kTwoPi * std::cos(kTwoPi * (t - 0.1));
}

double CurveManifold::test_function_d2(double t) const {
    return -kTwoPi * kTwoPi * std::sin(kTwoPi * (t - 0.1));
}

double CurveManifold::delta_p_f(double t) const {
    return test_function_d2(t) + test_function_d1(t) * density_d1(t) / density(t);
}

double CurveManifold::l_p_f(double t) const {
    double drift = (1.0 - 2.0 / kIntrinsicDim) * test_function_d1(t) * density_d1(t) / density(t);
    return test_function_d2(t) + drift;
}

double CurveManifold::q_correction(double t) const {
    return (density_d2(t) / density(t) + omega_) / (2.0 * (kIntrinsicDim + 2));
}

double CurveManifold::rho_min() const { return std::pow(2.0 / (3.0 * p_max_), 1.0 / kIntrinsicDim); }

double CurveManifold::rho_max() const { return std::pow(2.0 / p_min_, 1.0 / kIntrinsicDim); }

double CurveManifold::rho_bar(double t) const {
    return std::pow(density(t), -1.0 / kIntrinsicDim);
}

double CurveManifold::population_bandwidth(double t, double r, RegimePolicy policy,
                                           double tol) const {
    if (policy == RegimePolicy::Strict && r > r0_)
        throw numerical_error("population bandwidth out of regime: r exceeds r0");
    return solve_population_bandwidth(density(t), q_correction(t), r, kIntrinsicDim, tol);
}

double CurveManifold::cdf(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw invalid_parameter("cdf: t must lie in [0, 1]");
    double x = t * kCdfIntervals;
    int cell = std::min(static_cast<int>(x), kCdfIntervals - 1);
    double frac = x - cell;
    double lo = cdf_[static_cast<std::size_t>(cell)];
    double hi = cdf_[static_cast<std::size_t>(cell + 1)];
    return lo + frac * (hi - lo);
}

double CurveManifold::interval_mass(double t_lo, double t_hi) const {
    if (!(t_hi > t_lo) || t_hi - t_lo > 1.0)
        throw invalid_parameter("interval_mass: need t_lo < t_hi <= t_lo + 1");
    double lo = wrap_unit(t_lo);
    double hi = lo + (t_hi - t_lo);
    if (hi <= 1.0) return cdf(hi) - cdf(lo);
    return (1.0 - cdf(lo)) + cdf(hi - 1.0);
}

double CurveManifold::invert_cdf(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    int cell = std::max<int>(1, std::min<int>(static_cast<int>(it - cdf_.begin()),
                                              kCdfIntervals)) -
               1;
    double lo = cdf_[static_cast<std::size_t>(cell)];
    double hi = cdf_[static_cast<std::size_t>(cell + 1)];
    double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
    return (static_cast<double>(cell) + frac) / kCdfIntervals;
}

PointCloud CurveManifold::sample(Eigen::Index n, std::uint64_t seed) const {
    return sample_interval(n, seed, 0.0, 1.0);
}

PointCloud CurveManifold::sample_interval(Eigen::Index n, std::uint64_t seed, double t_lo,
                                          double t_hi) const {
    if (n < 1) throw invalid_parameter("sample: need n >= 1");
    if (!(t_hi > t_lo) || t_hi - t_lo > 1.0)
        throw invalid_parameter("sample_interval: need t_lo < t_hi <= t_lo + 1");
    double lo = wrap_unit(t_lo);
    double u_lo = cdf(lo);
    double mass = interval_mass(t_lo, t_hi);

    std::mt19937_64 eng(splitmix64(seed));
    PointCloud cloud;
    cloud.points.resize(n, kAmbientDim);
    cloud.intrinsic = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = u_lo + unit_double(eng()) * mass;
        double t = u <= 1.0 ? invert_cdf(u) : invert_cdf(u - 1.0);
        t = wrap_unit(t);
        (*cloud.intrinsic)(i) = t;
        cloud.points.row(i) = embed(t).transpose();
    }
    return cloud;
}

BandwidthErrorReport bandwidth_sup_error(const PointCloud& cloud, const BandwidthProfile& profile,
                                         const CurveManifold& mf, RegimePolicy policy) {
    if (!cloud.intrinsic)
        throw invalid_parameter("bandwidth_sup_error: cloud lacks intrinsic coordinates");
    if (profile.n != cloud.size())
        throw invalid_parameter("bandwidth_sup_error: profile does not match cloud");

    const Eigen::Index n = cloud.size();
    BandwidthErrorReport rep;
    rep.t = *cloud.intrinsic;
    rep.rho_hat = profile.rho_hat;
    rep.rho_bar.resize(n);
    rep.rho_bar_rk.resize(n);
    double sum_c = 0.0, sum_u = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double t = rep.t(i);
        double bar = mf.rho_bar(t);
        double bar_rk = mf.population_bandwidth(t, profile.r_k, policy);
        rep.rho_bar(i) = bar;
        rep.rho_bar_rk(i) = bar_rk;
        double ec = std::abs(profile.rho_hat(i) - bar_rk) / bar_rk;
        double eu = std::abs(profile.rho_hat(i) - bar) / bar;
        rep.eps_rho_k = std::max(rep.eps_rho_k, ec);
        rep.sup_uncorrected = std::max(rep.sup_uncorrected, eu);
        sum_c += ec;
        sum_u += eu;
    }
    rep.mean_corrected = sum_c / static_cast<double>(n);
    rep.mean_uncorrected = sum_u / static_cast<double>(n);
    return rep;
}

}  // namespace knnlap
