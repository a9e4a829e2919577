#include "knnlap/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "knnlap/common.hpp"

namespace knnlap {

namespace {
constexpr double kPi = 3.14159265358979323846;
// exp(-x) underflows below 1e-300 around x = 690.8.
constexpr double kExpCutoff = 690.0;

void check_dim(int d) {
    if (d < 1) throw invalid_parameter("dimension d must be >= 1");
}
}  // namespace

KernelSpec KernelSpec::indicator(double support_end) {
    if (!(support_end > 0.0)) throw invalid_parameter("indicator support end must be positive");
    KernelSpec s;
    s.family = KernelFamily::Indicator;
    s.support_end = support_end;
    return s;
}

KernelSpec KernelSpec::exponential(bool ambient_normalized) {
    KernelSpec s;
    s.family = KernelFamily::Exponential;
    s.ambient_normalized = ambient_normalized;
    return s;
}

double unit_ball_volume(int d) {
    check_dim(d);
    return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double eval_k0_shape(const KernelSpec& spec, double eta) {
    if (!(eta >= 0.0)) throw invalid_parameter("k0 argument eta must be >= 0");
    switch (spec.family) {
        case KernelFamily::Indicator:
            return eta <= spec.support_end ? 1.0 : 0.0;
        case KernelFamily::Exponential: {
            double x = 0.25 * eta;
            if (x > kExpCutoff) return 0.0;
            return std::exp(-x);
        }
    }
    return 0.0;
}

double eval_k0(const KernelSpec& spec, int d, double eta) {
    check_dim(d);
    double v = eval_k0_shape(spec, eta);
    if (spec.family == KernelFamily::Exponential && spec.ambient_normalized)
        v *= std::pow(4.0 * kPi, -0.5 * d);
    return v;
}

double eval_phi(PhiRule rule, double u, double v) {
    if (!(u > 0.0) || !(v > 0.0)) throw invalid_parameter("phi arguments must be positive");
    switch (rule) {
        case PhiRule::Min: return std::min(u, v);
        case PhiRule::Max: return std::max(u, v);
        case PhiRule::GeometricMean: return std::sqrt(u * v);
        case PhiRule::ArithmeticMean: return 0.5 * (u + v);
        case PhiRule::SquareMean: return std::sqrt(0.5 * (u * u + v * v));
    }
    throw invalid_parameter("unknown phi rule");
}

KernelMoments k0_moments(const KernelSpec& spec, int d) {
    check_dim(d);
    KernelMoments m;
    m.d = d;
    double alpha_d = unit_ball_volume(d);
    switch (spec.family) {
        case KernelFamily::Indicator: {
            double s = spec.support_end;
            m.m0 = alpha_d * std::pow(s, 0.5 * d);
            m.m2 = alpha_d * std::pow(s, 0.5 * (d + 2)) / (d + 2);
            break;
        }
        case KernelFamily::Exponential: {
            // integral of exp(-|u|^2/4) over R^d is (4 pi)^{d/2}; the second
            // moment doubles it.
            double c = spec.ambient_normalized ? 1.0 : std::pow(4.0 * kPi, 0.5 * d);
            m.m0 = c;
            m.m2 = 2.0 * c;
            break;
        }
    }
    return m;
}

RateClass classify_rate(const KernelSpec& spec, PhiRule rule) {
    bool minmax = (rule == PhiRule::Min || rule == PhiRule::Max);
    if (spec.family == KernelFamily::Exponential)
        return minmax ? RateClass::SlowI : RateClass::Fast;
    return minmax ? RateClass::SlowIII : RateClass::SlowII;
}

std::string to_short_string(const KernelSpec& spec) {
    if (spec.family == KernelFamily::Exponential) return "exp";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "ind:%g", spec.support_end);
    return buf;
}

std::string to_short_string(PhiRule rule) {
    switch (rule) {
        case PhiRule::Min: return "min";
        case PhiRule::Max: return "max";
        case PhiRule::GeometricMean: return "geo";
        case PhiRule::ArithmeticMean: return "mean";
        case PhiRule::SquareMean: return "sqmean";
    }
    return "?";
}

std::string to_string(RateClass rc) {
    switch (rc) {
        case RateClass::Fast: return "fast";
        case RateClass::SlowI: return "slow-I";
        case RateClass::SlowII: return "slow-II";
        case RateClass::SlowIII: return "slow-III";
    }
    return "?";
}

KernelSpec parse_kernel(std::string_view s) {
    if (s == "exp") return KernelSpec::exponential();
    if (s.rfind("ind:", 0) == 0) {
        std::string tail(s.substr(4));
        char* end = nullptr;
        double v = std::strtod(tail.c_str(), &end);
        if (end != tail.c_str() + tail.size() || !(v > 0.0))
            throw data_error("bad indicator support in kernel string: " + std::string(s));
        return KernelSpec::indicator(v);
    }
    throw data_error("unknown kernel string: " + std::string(s));
}

PhiRule parse_phi(std::string_view s) {
    if (s == "min") return PhiRule::Min;
    if (s == "max") return PhiRule::Max;
    if (s == "geo") return PhiRule::GeometricMean;
    if (s == "mean") return PhiRule::ArithmeticMean;
    if (s == "sqmean") return PhiRule::SquareMean;
    throw data_error("unknown phi string: " + std::string(s));
}

}  // namespace knnlap
