#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace detailnet {

// Seeded generator with a fixed draw order so runs are reproducible and
// checkpoints can capture the exact stream position. All transforms are
// hand-rolled on top of mt19937_64 output; std:: distributions are
// implementation-defined and would not round-trip across stdlibs.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

    // Standard normal via Box-Muller; the spare value is cached, so a draw
    // consumes either zero or two engine outputs.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Textual state capture, including the Box-Muller cache.
    std::string serialize() const;
    void deserialize(const std::string& blob);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace detailnet
