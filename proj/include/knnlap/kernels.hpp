#pragma once

#include <string>
#include <string_view>

namespace knnlap {

// Kernel profile k0: a non-negative non-increasing function of the squared
// distance ratio. Two families:
//   Indicator(s):   k0(eta) = 1 on [0, s], 0 otherwise.
//   Exponential:    k0(eta) = (4*pi)^(-d/2) * exp(-eta/4) when
//                   ambient_normalized, exp(-eta/4) otherwise.
// The indicator support end is a parameter: the theory uses [0,1], the
// experiments use [0,3]; the latter is the former under a rescaled bandwidth.
enum class KernelFamily { Indicator, Exponential };

struct KernelSpec {
    KernelFamily family = KernelFamily::Exponential;
    double support_end = 1.0;        // Indicator only
    bool ambient_normalized = true;  // Exponential only

    static KernelSpec indicator(double support_end);
    static KernelSpec exponential(bool ambient_normalized = true);
    bool operator==(const KernelSpec&) const = default;
};

// Symmetric bandwidth combination rules phi(u, v).
enum class PhiRule { Min, Max, GeometricMean, ArithmeticMean, SquareMean };

struct KernelMoments {
    double m0 = 0.0;  // integral of k0(|u|^2) over R^d
    double m2 = 0.0;  // (1/d) integral of |u|^2 k0(|u|^2) over R^d
    int d = 0;
    // The divisor in front of the random-walk Laplacians; 1 for the
    // ambient-normalized exponential kernel.
    double ratio() const { return m2 / (2.0 * m0); }
};

enum class RateClass { Fast, SlowI, SlowII, SlowIII };

// Lipschitz constants of phi recorded as documentation metadata; no runtime
// logic depends on them.
struct PhiLipschitzInfo {
    double L_phi;
    double delta_phi;
};
inline constexpr PhiLipschitzInfo kPhiSmoothLipschitz{1.2, 0.1};
inline constexpr PhiLipschitzInfo kPhiMinMaxLipschitz{1.0, 1.0};

// Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1).
double unit_ball_volume(int d);

// k0(eta) in the theoretical form (normalization prefactor applied when the
// spec says so). Negative eta is a domain error. Values that would underflow
// below 1e-300 return exactly 0.
double eval_k0(const KernelSpec& spec, int d, double eta);

// k0 with any ambient normalization prefactor dropped; this is the form the
// practical sigma0-parameterized affinity evaluates.
double eval_k0_shape(const KernelSpec& spec, double eta);

// phi(u, v) for u, v > 0; non-positive input is a domain error.
double eval_phi(PhiRule rule, double u, double v);

// Closed-form moments m0, m2 of k0 in dimension d.
KernelMoments k0_moments(const KernelSpec& spec, int d);

// Convergence-rate class of the (k0, phi) pair.
RateClass classify_rate(const KernelSpec& spec, PhiRule rule);

// Short-string forms used in config files and CSV columns:
// kernels "exp", "ind:1", "ind:3"; rules "min", "max", "geo", "mean",
// "sqmean". parse_* throw data_error on unknown strings.
std::string to_short_string(const KernelSpec& spec);
std::string to_short_string(PhiRule rule);
std::string to_string(RateClass rc);
KernelSpec parse_kernel(std::string_view s);
PhiRule parse_phi(std::string_view s);

}  // namespace knnlap
