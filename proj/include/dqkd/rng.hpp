#pragma once

#include <cstdint>
#include <random>

namespace dqkd {

/// SplitMix64 finalizer; derives decorrelated seeds for named sub-streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Seedable random source used by every stochastic component.
 *
 * A noiseless instance returns exactly zero for Gaussian draws while still
 * advancing the engine, so code paths that add noise can be checked against
 * their deterministic part without a separate code path.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_tag_(seed) {}

    static Rng noiseless(std::uint64_t seed = 0) {
        Rng r(seed);
        r.silent_ = true;
        return r;
    }

    /// Independent stream keyed by `stream`; the parent is not advanced.
    Rng split(std::uint64_t stream) const {
        Rng r(mix_seed(seed_tag_, stream));
        r.silent_ = silent_;
        return r;
    }

    double normal(double sigma = 1.0) {
        const double z = normal_(engine_);
        return silent_ ? 0.0 : sigma * z;
    }

    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    /// Uniform on (0, 1].
    double uniform_open_low() { return 1.0 - uniform_(engine_); }

    std::uint64_t next_u64() { return engine_(); }

    bool silent() const { return silent_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_tag_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    bool silent_ = false;
};

}  // namespace dqkd
