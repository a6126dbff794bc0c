#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pnclab {

// Deterministic random source. The stream is fully pinned down so runs are
// reproducible byte-for-byte:
//   * core generator: std::mt19937_64 (bit-exact per the C++ standard),
//   * uniform doubles: top 53 bits of one 64-bit draw, giving [0, 1),
//   * standard normals: Marsaglia polar rejection on pairs of uniforms,
//     with the spare deviate cached.
// Never route draws through std::uniform_real_distribution or
// std::normal_distribution; their output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the polar method.
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

    // Fair bit for random binary data.
    int bit() { return static_cast<int>(engine_() >> 63); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Splits one master seed into independent stream seeds (splitmix64 mix of
// seed and stream index). Concurrent tasks each get their own stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pnclab
