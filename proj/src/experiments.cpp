#include "knnlap/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "knnlap/common.hpp"
#include "knnlap/graph.hpp"
#include "knnlap/knn.hpp"

namespace knnlap {

namespace {

// Stream tags keeping the derived seeds of different experiment phases apart.
constexpr std::uint64_t kTagNeighborhood = 0x6e626872ULL;  // "nbhr"
constexpr std::uint64_t kTagReplica = 0x7265706cULL;       // "repl"
constexpr std::uint64_t kTagRate = 0x72617465ULL;          // "rate"

std::uint64_t replica_seed(const ConvergenceConfig& cfg, int case_idx, int sigma_idx,
                           int replica) {
    return seed_hash({cfg.master_seed, kTagReplica,
                      fnv1a64(cfg.cases[static_cast<std::size_t>(case_idx)].label()),
                      static_cast<std::uint64_t>(sigma_idx), static_cast<std::uint64_t>(replica)});
}

}  // namespace

std::vector<KernelCase> default_convergence_cases() {
    return {
        {KernelSpec::exponential(), PhiRule::GeometricMean},
        {KernelSpec::exponential(), PhiRule::SquareMean},
        {KernelSpec::exponential(), PhiRule::Min},
        {KernelSpec::indicator(3.0), PhiRule::GeometricMean},
        {KernelSpec::indicator(3.0), PhiRule::Min},
    };
}

void ConvergenceConfig::validate() const {
    if (cases.empty()) throw invalid_parameter("config: no kernel cases");
    if (sigma0_sq_grid.size() < 2) throw invalid_parameter("config: sigma0_sq grid too short");
    for (std::size_t i = 1; i < sigma0_sq_grid.size(); ++i)
        if (!(sigma0_sq_grid[i] > sigma0_sq_grid[i - 1]))
            throw invalid_parameter("config: sigma0_sq grid must be strictly increasing");
    if (!(sigma0_sq_grid.front() > 0.0)) throw invalid_parameter("config: sigma0_sq must be > 0");
    if (replicas < 1) throw invalid_parameter("config: replicas must be >= 1");
    if (k < 1 || k >= n_neighborhood)
        throw invalid_parameter("config: need 1 <= k < n_neighborhood");
    if (!(neighborhood_threshold > 0.0 && neighborhood_threshold < 1.0))
        throw invalid_parameter("config: neighborhood threshold must lie in (0, 1)");
    if (probe_n < 2 || probe_runs < 1 || probe_grid < 2)
        throw invalid_parameter("config: bad probe parameters");
    if (bias_grid_m < 1000) throw invalid_parameter("config: bias grid must have >= 1000 points");
}

std::vector<double> log_spaced_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw invalid_parameter("log_spaced_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> g(static_cast<std::size_t>(count));
    double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] =
            std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw invalid_parameter("fit_slope: size mismatch");
    const std::size_t n = xs.size();
    if (n < 3) throw invalid_parameter("fit_slope: need at least 3 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw invalid_parameter("fit_slope: degenerate xs (all equal)");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.valid = true;
    return fit;
}

NeighborhoodSelection select_neighborhood(const CurveManifold& mf, double x0_t,
                                          const std::vector<KernelCase>& cases,
                                          const std::vector<double>& sigma0_sq_grid,
                                          const std::vector<int>& k_grid, double threshold,
                                          Eigen::Index probe_n, int probe_runs, int probe_grid,
                                          std::uint64_t seed, int threads) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw invalid_parameter("neighborhood threshold must lie in (0, 1)");
    if (cases.empty() || sigma0_sq_grid.empty() || k_grid.empty())
        throw invalid_parameter("select_neighborhood: empty case/sigma/k grid");
    int k_max = *std::max_element(k_grid.begin(), k_grid.end());
    if (k_max < 1 || k_max >= probe_n)
        throw invalid_parameter("select_neighborhood: need max k < probe_n");

    const Eigen::Vector4d x0 = mf.embed(x0_t);

    for (double half_width : {0.25, 0.5}) {
        const double spacing = 2.0 * half_width / (probe_grid - 1);
        std::vector<double> lo_run(static_cast<std::size_t>(probe_runs), 0.0);
        std::vector<double> hi_run(static_cast<std::size_t>(probe_runs), 0.0);

        parallel_for(static_cast<std::size_t>(probe_runs), threads, [&](std::size_t run) {
            std::uint64_t run_seed = seed_hash({seed, kTagNeighborhood, run});
            PointCloud cloud = mf.sample(probe_n, run_seed);
            KdTree tree(cloud.points);
            std::vector<double> r0_list = tree.knn_distances(x0, k_max);

            double lo = 0.0, hi = 0.0;
            for (int g = 0; g < probe_grid; ++g) {
                double offset = -half_width + spacing * g;
                double ty = x0_t + offset;
                Eigen::Vector4d y = mf.embed(ty);
                double dist2 = (y - x0).squaredNorm();
                std::vector<double> ry_list = tree.knn_distances(y, k_max);
                bool above = false;
                for (int k : k_grid) {
                    double r0 = r0_list[static_cast<std::size_t>(k - 1)];
                    double ry = ry_list[static_cast<std::size_t>(k - 1)];
                    if (!(r0 > 0.0 && ry > 0.0)) continue;
                    for (const KernelCase& kc : cases) {
                        double ph = eval_phi(kc.phi, r0, ry);
                        for (double s2 : sigma0_sq_grid) {
                            if (eval_k0_shape(kc.kernel, dist2 / (s2 * ph * ph)) >= threshold) {
                                above = true;
                                break;
                            }
                        }
                        if (above) break;
                    }
                    if (above) break;
                }
                if (above) {
                    lo = std::min(lo, offset);
                    hi = std::max(hi, offset);
                }
            }
            lo_run[run] = lo;
            hi_run[run] = hi;
        });

        double lo = *std::min_element(lo_run.begin(), lo_run.end());
        double hi = *std::max_element(hi_run.begin(), hi_run.end());
        // Clamp to a minimal width of one grid spacing per side.
        lo = std::min(lo, -spacing);
        hi = std::max(hi, spacing);

        bool saturated = lo <= -half_width + 0.5 * spacing || hi >= half_width - 0.5 * spacing;
        if (!saturated || half_width >= 0.5) {
            NeighborhoodSelection sel;
            if (saturated) {
                sel.interval = {x0_t - 0.5, x0_t + 0.5};
                sel.full_domain = true;
            } else {
                sel.interval = {x0_t + lo, x0_t + hi};
            }
            sel.mass = mf.interval_mass(sel.interval.lo, sel.interval.hi);
            return sel;
        }
    }
    throw numerical_error("select_neighborhood: unreachable");
}

double pointwise_error(const CurveManifold& mf, const ConvergenceConfig& cfg,
                       const NeighborhoodSelection& nb, int case_idx, int sigma_idx, int replica) {
    const KernelCase& kc = cfg.cases[static_cast<std::size_t>(case_idx)];
    const double sigma0_sq = cfg.sigma0_sq_grid[static_cast<std::size_t>(sigma_idx)];
    std::uint64_t seed = replica_seed(cfg, case_idx, sigma_idx, replica);

    PointCloud cloud =
        mf.sample_interval(cfg.n_neighborhood, seed, nb.interval.lo, nb.interval.hi);
    KdTree tree(cloud.points);
    const Eigen::Index n = cloud.size();
    Eigen::VectorXd r_hat(n);
    for (Eigen::Index i = 0; i < n; ++i)
        r_hat(i) = tree.knn_distance(cloud.points.row(i).transpose(), cfg.k);

    const Eigen::Vector4d x0 = mf.embed(cfg.x0_t);
    double r_hat_x0 = tree.knn_distance(x0, cfg.k);

    Eigen::VectorXd f_values(n);
    for (Eigen::Index i = 0; i < n; ++i) f_values(i) = mf.test_function((*cloud.intrinsic)(i));

    KernelMoments moments = k0_moments(kc.kernel, CurveManifold::kIntrinsicDim);
    double value = laplacian_apply_at(LaplacianKind::RwTilde, x0, mf.test_function(cfg.x0_t),
                                      cloud, f_values, r_hat, r_hat_x0, kc.kernel, kc.phi,
                                      std::sqrt(sigma0_sq), moments);
    return std::abs(value - mf.delta_p_f(cfg.x0_t));
}

double bias_reference(const CurveManifold& mf, const ConvergenceConfig& cfg,
                      const NeighborhoodSelection& nb, int case_idx, double sigma0_sq,
                      Eigen::Index grid_m) {
    if (grid_m < 1000) throw invalid_parameter("bias_reference: grid_m must be >= 1000");
    const KernelCase& kc = cfg.cases[static_cast<std::size_t>(case_idx)];
    const int d = CurveManifold::kIntrinsicDim;
    const double alpha_d = unit_ball_volume(d);

    // Effective global sample size implied by restricting n_neighborhood
    // points to the interval.
    double n_eff = static_cast<double>(cfg.n_neighborhood) / nb.mass;
    double sqrt_rk = std::pow(static_cast<double>(cfg.k) / (alpha_d * n_eff), 1.0 / d);
    double r_k = sqrt_rk * sqrt_rk;

    const Eigen::Vector4d x0 = mf.embed(cfg.x0_t);
    double rbar_x0 = sqrt_rk * mf.population_bandwidth(cfg.x0_t, r_k);

    const double s2 = sigma0_sq;
    KernelMoments moments = k0_moments(kc.kernel, d);

    double sum_w = 0.0, sum_wf = 0.0;
    for (Eigen::Index j = 0; j < grid_m; ++j) {
        double t = static_cast<double>(j) / static_cast<double>(grid_m);
        double rbar = sqrt_rk * mf.population_bandwidth(t, r_k);
        double dist2 = (mf.embed(t) - x0).squaredNorm();
        double ph = eval_phi(kc.phi, rbar_x0, rbar);
        double v = eval_k0_shape(kc.kernel, dist2 / (s2 * ph * ph)) / (s2 * ph * ph);
        double weight = v * mf.density(t);
        sum_w += weight;
        sum_wf += weight * mf.test_function(t);
    }
    if (!(sum_w > 0.0)) throw numerical_error("bias_reference: all grid weights are zero");

    double f0 = mf.test_function(cfg.x0_t);
    double value = (sum_wf / sum_w - f0) / (moments.ratio() * s2 * rbar_x0 * rbar_x0);
    return std::abs(value - mf.delta_p_f(cfg.x0_t));
}

namespace {

// Start index of the longest non-decreasing suffix.
int increasing_suffix_start(const std::vector<double>& v) {
    int start = static_cast<int>(v.size()) - 1;
    while (start > 0 && v[static_cast<std::size_t>(start - 1)] <= v[static_cast<std::size_t>(start)])
        --start;
    return start;
}

SlopeFit fit_window(const std::vector<double>& grid, const std::vector<double>& values, int lo,
                    int hi, const char* name) {
    SlopeFit fit;
    fit.window_lo = lo;
    fit.window_hi = hi;
    if (hi - lo + 1 < 3) {
        fit.valid = false;
        fit.note = std::string(name) + " window shorter than 3 points; fit skipped";
        return fit;
    }
    std::vector<double> xs, ys;
    for (int i = lo; i <= hi; ++i) {
        xs.push_back(std::log(grid[static_cast<std::size_t>(i)]));
        ys.push_back(std::log(values[static_cast<std::size_t>(i)]));
    }
    SlopeFit f = fit_slope(xs, ys);
    f.window_lo = lo;
    f.window_hi = hi;
    return f;
}

}  // namespace

ConvergenceResult run_convergence(const CurveManifold& mf, const ConvergenceConfig& cfg,
                                  int threads) {
    cfg.validate();
    ConvergenceResult result;
    result.neighborhood = select_neighborhood(
        mf, cfg.x0_t, cfg.cases, cfg.sigma0_sq_grid, {cfg.k}, cfg.neighborhood_threshold,
        cfg.probe_n, cfg.probe_runs, cfg.probe_grid, cfg.master_seed, threads);

    const int n_cases = static_cast<int>(cfg.cases.size());
    const int n_sigma = static_cast<int>(cfg.sigma0_sq_grid.size());
    const int n_rep = cfg.replicas;
    const std::size_t n_tasks =
        static_cast<std::size_t>(n_cases) * static_cast<std::size_t>(n_sigma) *
        static_cast<std::size_t>(n_rep);

    result.records.resize(n_tasks);
    parallel_for(n_tasks, threads, [&](std::size_t task) {
        int replica = static_cast<int>(task % static_cast<std::size_t>(n_rep));
        int sigma_idx = static_cast<int>((task / static_cast<std::size_t>(n_rep)) %
                                         static_cast<std::size_t>(n_sigma));
        int case_idx = static_cast<int>(task / (static_cast<std::size_t>(n_rep) *
                                                static_cast<std::size_t>(n_sigma)));
        auto t0 = std::chrono::steady_clock::now();
        double err = pointwise_error(mf, cfg, result.neighborhood, case_idx, sigma_idx, replica);
        auto t1 = std::chrono::steady_clock::now();

        ExperimentRecord& rec = result.records[task];
        rec.case_idx = case_idx;
        rec.sigma0_sq = cfg.sigma0_sq_grid[static_cast<std::size_t>(sigma_idx)];
        rec.k = cfg.k;
        rec.n = cfg.n_neighborhood;
        rec.replica = replica;
        rec.err = err;
        rec.seed = replica_seed(cfg, case_idx, sigma_idx, replica);
        rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    });

    // Deterministic bias references, then summaries.
    for (int c = 0; c < n_cases; ++c) {
        CaseSummary summary;
        summary.case_idx = c;
        summary.label = cfg.cases[static_cast<std::size_t>(c)].label();
        summary.mean_err.resize(static_cast<std::size_t>(n_sigma));
        summary.sd_err.resize(static_cast<std::size_t>(n_sigma));
        summary.errbar.resize(static_cast<std::size_t>(n_sigma));
        for (int s = 0; s < n_sigma; ++s) {
            double errbar = bias_reference(mf, cfg, result.neighborhood, c,
                                           cfg.sigma0_sq_grid[static_cast<std::size_t>(s)],
                                           cfg.bias_grid_m);
            summary.errbar[static_cast<std::size_t>(s)] = errbar;
            double sum = 0.0, sum2 = 0.0;
            for (int r = 0; r < n_rep; ++r) {
                std::size_t idx = (static_cast<std::size_t>(c) * n_sigma + s) *
                                      static_cast<std::size_t>(n_rep) +
                                  static_cast<std::size_t>(r);
                result.records[idx].errbar = errbar;
                sum += result.records[idx].err;
                sum2 += result.records[idx].err * result.records[idx].err;
            }
            double mean = sum / n_rep;
            summary.mean_err[static_cast<std::size_t>(s)] = mean;
            summary.sd_err[static_cast<std::size_t>(s)] =
                n_rep > 1 ? std::sqrt(std::max(0.0, (sum2 - n_rep * mean * mean) / (n_rep - 1)))
                          : 0.0;
        }

        // Variance/bias windows split at the minimum of the mean-Err curve.
        int argmin = 0;
        for (int s = 1; s < n_sigma; ++s)
            if (summary.mean_err[static_cast<std::size_t>(s)] <
                summary.mean_err[static_cast<std::size_t>(argmin)])
                argmin = s;
        summary.argmin_idx = argmin;
        summary.variance_fit =
            fit_window(cfg.sigma0_sq_grid, summary.mean_err, 0, argmin, "variance");
        summary.bias_fit =
            fit_window(cfg.sigma0_sq_grid, summary.mean_err, argmin, n_sigma - 1, "bias");
        summary.errbar_fit = fit_window(cfg.sigma0_sq_grid, summary.errbar,
                                        increasing_suffix_start(summary.errbar), n_sigma - 1,
                                        "errbar");
        result.summaries.push_back(std::move(summary));
    }
    return result;
}

Schedule rate_schedule(Eigen::Index n, int d, RateRegime regime, double c, double c_prime) {
    if (n < 2 || d < 1) throw invalid_parameter("rate_schedule: need N >= 2, d >= 1");
    if (!(c > 0.0) || !(c_prime > 0.0)) throw invalid_parameter("rate_schedule: constants must be positive");
    Schedule sch;
    sch.regime = regime;
    double nd = static_cast<double>(n);
    auto clamp_k = [&](double v) {
        long long k = std::llround(v);
        if (k < 1) {
            k = 1;
            sch.clamped = true;
        }
        if (k >= n) {
            k = n - 1;
            sch.clamped = true;
        }
        return k;
    };
    if (regime == RateRegime::Fast) {
        sch.eps = c * std::pow(nd, -2.0 / (d + 6));
        sch.k = clamp_k(c_prime * std::pow(nd, 6.0 / (d + 6)));
    } else {
        sch.eps = c * std::pow(nd, -2.0 / (d + 4));
        sch.k_lo = clamp_k(c_prime * std::pow(nd, 4.0 / (d + 4)));
        sch.k_hi = clamp_k(c_prime * std::pow(nd, (d / 3.0 + 4.0) / (d + 4)));
    }
    return sch;
}

KnnRateResult knn_rate_experiment(const CurveManifold& mf, const std::vector<Eigen::Index>& n_list,
                                  const std::function<int(Eigen::Index)>& k_of_n,
                                  std::uint64_t seed, int n_seeds, int threads) {
    if (n_list.empty()) throw invalid_parameter("knn_rate_experiment: empty N list");
    if (n_seeds < 1) throw invalid_parameter("knn_rate_experiment: need n_seeds >= 1");
    KnnRateResult res;
    res.n_list = n_list;
    res.k_list.resize(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        int k = k_of_n(n_list[i]);
        if (k < 1 || k >= n_list[i])
            throw invalid_parameter("knn_rate_experiment: schedule gives k outside (0, N)");
        res.k_list[i] = k;
    }

    const std::size_t n_tasks = n_list.size() * static_cast<std::size_t>(n_seeds);
    res.per_seed.resize(n_seeds, static_cast<Eigen::Index>(n_list.size()));
    parallel_for(n_tasks, threads, [&](std::size_t task) {
        std::size_t ni = task % n_list.size();
        int s = static_cast<int>(task / n_list.size());
        std::uint64_t cloud_seed =
            seed_hash({seed, kTagRate, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(ni)});
        PointCloud cloud = mf.sample(n_list[ni], cloud_seed);
        BandwidthProfile profile = bandwidth_profile(cloud, res.k_list[ni],
                                                     CurveManifold::kIntrinsicDim,
                                                     KnnMethod::Indexed, 1);
        BandwidthErrorReport rep = bandwidth_sup_error(cloud, profile, mf);
        res.per_seed(s, static_cast<Eigen::Index>(ni)) = rep.eps_rho_k;
    });

    res.mean_eps.resize(n_list.size());
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        res.mean_eps[i] = res.per_seed.col(static_cast<Eigen::Index>(i)).mean();
        xs.push_back(std::log(static_cast<double>(n_list[i])));
        ys.push_back(std::log(res.mean_eps[i]));
    }
    res.fit = n_list.size() >= 3 ? fit_slope(xs, ys) : SlopeFit{};
    return res;
}

std::vector<BandwidthExperimentResult> bandwidth_experiment(const CurveManifold& mf,
                                                            Eigen::Index n,
                                                            const std::vector<int>& k_list,
                                                            std::uint64_t seed, int threads) {
    if (k_list.empty()) throw invalid_parameter("bandwidth_experiment: empty k list");
    for (int k : k_list)
        if (k < 1 || k >= n) throw invalid_parameter("bandwidth_experiment: need 1 <= k < N");
    PointCloud cloud = mf.sample(n, seed);
    std::vector<BandwidthExperimentResult> out;
    for (int k : k_list) {
        BandwidthExperimentResult item;
        item.k = k;
        BandwidthProfile profile =
            bandwidth_profile(cloud, k, CurveManifold::kIntrinsicDim, KnnMethod::Indexed, threads);
        item.r_k = profile.r_k;
        item.report = bandwidth_sup_error(cloud, profile, mf);
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace knnlap
