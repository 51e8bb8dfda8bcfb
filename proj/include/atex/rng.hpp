#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace atex {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic generator wrapper. All distribution transforms are done in
/// this codebase (not via std:: distributions) so that identical seeds give
/// identical streams on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Named sub-stream: one master seed fans out into independent streams
    /// (per agent, per bootstrap replicate, ...).
    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id) {
        return Rng(splitmix64(master_seed ^ splitmix64(stream_id + 0x51ed2700a1b3c64dULL)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1): never returns 0, safe for inverse-CDF transforms.
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Marsaglia polar rejection.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    std::uint64_t below(std::uint64_t bound) {
        // Modulo bias is irrelevant at 64-bit range for the bounds used here.
        return engine_() % bound;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace atex
