#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace hepa {

// Deterministic generator with a fixed cross-platform sequence
// (std::normal_distribution and friends are implementation-defined).
// splitmix64 core, Box-Muller normals.
struct rng64 {
    std::uint64_t state;
    bool have_spare = false;
    double spare = 0.0;

    explicit rng64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform() * static_cast<double>(hi - lo + 1));
    }

    double normal(double mean = 0.0, double sigma = 1.0) {
        if (have_spare) {
            have_spare = false;
            return mean + sigma * spare;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(a);
        have_spare = true;
        return mean + sigma * r * std::cos(a);
    }

    template <typename V>
    void shuffle(V& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // independent child stream
    rng64 fork(std::uint64_t salt) {
        std::uint64_t s = next_u64();
        return rng64(s ^ (salt * 0xD1342543DE82EF95ull));
    }
};

}  // namespace hepa
