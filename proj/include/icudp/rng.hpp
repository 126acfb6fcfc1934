#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace icudp {

/// splitmix64 finalizer; used to mix seeds and derive independent streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a string, for deriving per-stay streams from stay ids.
inline std::uint64_t hash_tag(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(base ^ mix64(tag));
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1,
                                 std::uint64_t t2) {
    return derive_seed(derive_seed(base, t1), t2);
}

// Deterministic random stream. The raw mt19937_64 output sequence is fixed by
// the standard; distributions are hand-rolled because std:: distribution
// implementations are not, and the toolkit promises bit-reproducible runs.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(mix64(seed)) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n); n must be positive.
    int uniform_int(int n) {
        return static_cast<int>(uniform01() * static_cast<double>(n));
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (two uniforms per draw, no cache).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Sample an index from a probability vector (sums to ~1). Rounding
    /// leftovers fall to the last index with positive mass.
    int categorical(std::span<const double> probs) {
        double u = uniform01();
        double acc = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last_positive = static_cast<int>(i);
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return last_positive;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace icudp
