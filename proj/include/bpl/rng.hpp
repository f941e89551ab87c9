// rng.hpp — Deterministic per-trajectory random streams.
//
// Every ensemble draws from streams derived from (seed, trajectory index), so
// results do not depend on thread scheduling or worker count. Uniform doubles
// are built from raw 53-bit words instead of std distributions to keep the
// byte-identical reproducibility contract independent of the standard library.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace bpl {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    static RngStream for_trajectory(std::uint64_t seed, std::uint64_t index) {
        return RngStream(splitmix64(seed) ^ splitmix64(index + 0x5851F42D4C957F2DULL));
    }

    // Uniform in [0, 1) with 53 significant bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform01_open_low() { return 1.0 - uniform01(); }

    double exponential() { return -std::log(uniform01_open_low()); }

    double normal() {
        // Box-Muller, first branch only; exactness over thrift.
        const double u = uniform01_open_low();
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
    }

    // Index drawn with probability weights[i] / total over nonnegative weights.
    int categorical(std::span<const double> weights, double total) {
        if (!(total > 0.0)) {
            throw std::invalid_argument("categorical: total weight must be positive");
        }
        const double target = uniform01() * total;
        double acc = 0.0;
        int last_positive = -1;
        for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
            if (weights[static_cast<std::size_t>(i)] <= 0.0) continue;
            last_positive = i;
            acc += weights[static_cast<std::size_t>(i)];
            if (target < acc) return i;
        }
        if (last_positive < 0) {
            throw std::invalid_argument("categorical: no positive weight");
        }
        return last_positive;   // roundoff at the upper edge
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace bpl
