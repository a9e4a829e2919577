#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "knnlap/kernels.hpp"
#include "knnlap/manifold.hpp"

namespace knnlap {

// One (k0, phi) pair under test.
struct KernelCase {
    KernelSpec kernel;
    PhiRule phi = PhiRule::GeometricMean;
    std::string label() const { return to_short_string(kernel) + "|" + to_short_string(phi); }
};

// The five kernel/phi pairs of the convergence experiment, in order:
// exp|geo, exp|sqmean, exp|min, ind:3|geo, ind:3|min.
std::vector<KernelCase> default_convergence_cases();

struct ConvergenceConfig {
    std::vector<KernelCase> cases = default_convergence_cases();
    std::vector<double> sigma0_sq_grid;  // strictly increasing
    int k = 512;
    Eigen::Index n_neighborhood = 4800;
    int replicas = 200;
    double x0_t = 0.0;
    std::uint64_t master_seed = 0;
    double neighborhood_threshold = 1e-3;
    Eigen::Index probe_n = 40000;
    int probe_runs = 1000;
    int probe_grid = 50;
    Eigen::Index bias_grid_m = 10000;

    void validate() const;
};

// Log-spaced grid helper (count points from lo to hi inclusive).
std::vector<double> log_spaced_grid(double lo, double hi, int count);

struct ExperimentRecord {
    int case_idx = 0;
    double sigma0_sq = 0.0;
    int k = 0;
    Eigen::Index n = 0;
    int replica = 0;
    double err = 0.0;
    double errbar = 0.0;  // shared across replicas of the same cell
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;  // in-memory only; never serialized
};

struct SlopeFit {
    int window_lo = 0, window_hi = 0;  // inclusive index range into the grid
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    bool valid = false;
    std::string note;
};

// Ordinary least squares of ys against xs (callers pass log values for
// log-log slopes). Needs >= 3 points and non-degenerate xs.
SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Arc interval around a point, in unwrapped coordinates (lo <= hi, hi may
// exceed 1; map into [0,1) by wrapping).
struct ArcInterval {
    double lo = 0.0, hi = 0.0;
    double width() const { return hi - lo; }
};

struct NeighborhoodSelection {
    ArcInterval interval;
    double mass = 0.0;  // integral of p over the interval
    bool full_domain = false;
};

// Smallest arc around x0 outside of which every probed affinity value stays
// below threshold, across the given cases, sigma0^2 grid and k grid. Monte
// Carlo over probe_runs draws of probe_n points with probe_grid evaluation
// points; the union over runs is returned. Falls back to the full circle
// (full_domain flag) if the interval saturates.
NeighborhoodSelection select_neighborhood(const CurveManifold& mf, double x0_t,
                                          const std::vector<KernelCase>& cases,
                                          const std::vector<double>& sigma0_sq_grid,
                                          const std::vector<int>& k_grid, double threshold,
                                          Eigen::Index probe_n, int probe_runs, int probe_grid,
                                          std::uint64_t seed, int threads = 0);

// One replica of the point-wise error Err = |L~_rw f(x0) - Delta_p f(x0)|,
// sampled from p restricted to the selected neighborhood. The replica stream
// is hash(master_seed, case label, sigma index, replica).
double pointwise_error(const CurveManifold& mf, const ConvergenceConfig& cfg,
                       const NeighborhoodSelection& nb, int case_idx, int sigma_idx, int replica);

// Deterministic bias reference Err-bar: the same L~_rw expression evaluated
// by Riemann sums on grid_m evenly spaced curve points with summands weighted
// by p, using the population bandwidth sqrt(r_k_eff) rho-bar_{r_k_eff} in
// place of the noisy kNN distances (N_eff = n_neighborhood / interval mass).
double bias_reference(const CurveManifold& mf, const ConvergenceConfig& cfg,
                      const NeighborhoodSelection& nb, int case_idx, double sigma0_sq,
                      Eigen::Index grid_m);

struct CaseSummary {
    int case_idx = 0;
    std::string label;
    std::vector<double> mean_err, sd_err, errbar;
    int argmin_idx = 0;         // grid index of the minimum mean Err
    SlopeFit variance_fit;      // over [0, argmin]
    SlopeFit bias_fit;          // over [argmin, end]
    SlopeFit errbar_fit;        // over errbar's own increasing suffix
};

struct ConvergenceResult {
    NeighborhoodSelection neighborhood;
    std::vector<ExperimentRecord> records;  // ordered by (case, sigma, replica)
    std::vector<CaseSummary> summaries;
};

ConvergenceResult run_convergence(const CurveManifold& mf, const ConvergenceConfig& cfg,
                                  int threads = 0);

// Optimal bandwidth/neighbor schedules in N.
enum class RateRegime { Fast, Slow };
struct Schedule {
    RateRegime regime = RateRegime::Fast;
    double eps = 0.0;
    long long k = 0;          // fast regime
    long long k_lo = 0, k_hi = 0;  // slow regime range
    bool clamped = false;
};
Schedule rate_schedule(Eigen::Index n, int d, RateRegime regime, double c = 1.0,
                       double c_prime = 1.0);

// Uniform kNN-bandwidth error eps_{rho,k} against N with k = k_of_n(N),
// averaged over n_seeds independent clouds, plus a log-log slope fit.
struct KnnRateResult {
    std::vector<Eigen::Index> n_list;
    std::vector<int> k_list;
    Eigen::MatrixXd per_seed;        // n_seeds x |n_list|
    std::vector<double> mean_eps;    // per N
    SlopeFit fit;
};
KnnRateResult knn_rate_experiment(const CurveManifold& mf, const std::vector<Eigen::Index>& n_list,
                                  const std::function<int(Eigen::Index)>& k_of_n,
                                  std::uint64_t seed, int n_seeds, int threads = 0);

// Bandwidth-function comparison: one cloud, per-k tables of
// (t, rho^, rho-bar, rho-bar_rk) with summary relative errors.
struct BandwidthExperimentResult {
    int k = 0;
    double r_k = 0.0;
    BandwidthErrorReport report;
};
std::vector<BandwidthExperimentResult> bandwidth_experiment(const CurveManifold& mf,
                                                            Eigen::Index n,
                                                            const std::vector<int>& k_list,
                                                            std::uint64_t seed, int threads = 0);

}  // namespace knnlap
