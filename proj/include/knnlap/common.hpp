#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

namespace knnlap {

// Parameter/precondition violations (bad k, negative eta, mismatched sizes).
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input files (CSV/JSON).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failures: degenerate bandwidths, solver out of regime, bad fits.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --------------------------------------------------------------------------
// Deterministic seeding. All experiment streams are derived with splitmix64
// so results are identical across platforms and thread counts.
// --------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Folds a list of values into one stream seed.
inline std::uint64_t seed_hash(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x853c49e6748fea9bULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

// Uniform double in [0,1) from a 64-bit word; avoids the
// implementation-defined std::uniform_real_distribution.
inline double unit_double(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Resolves a requested thread count: 0 means "auto" (KNNLAP_THREADS env var,
// then hardware concurrency).
int resolve_threads(int requested);

// Static-partition parallel loop; fn(i) is called once for every i in [0, n).
// Each index writes only its own outputs, so results never depend on the
// thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace knnlap
