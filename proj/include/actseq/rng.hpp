#pragma once

#include <cstdint>
#include <span>

namespace actseq {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// SplitMix64 output mixer (Vigna). mix64(seed + (i+1)*kGoldenGamma) is the
/// (i+1)-th output of a SplitMix64 stream seeded with `seed`.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// SplitMix64: the single PRNG used for every random draw in this project.
/// It is counter-based (state advances by a fixed increment; each output is a
/// pure function of the counter), so streams can be split and replayed
/// independently of evaluation order. Reference: S. Vigna, splitmix64.c
/// (CC0). Golden outputs are frozen in the tests.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Seed for the j-th child stream of `seed`. Equals the (j+1)-th output of
/// SplitMix64(seed), so child seeds can be computed in any order (parallel
/// batches stay reproducible regardless of scheduling).
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t j) {
    return mix64(seed + (j + 1) * kGoldenGamma);
}

/// Inverse-CDF draw from a probability vector: smallest index i with
/// u < p[0]+...+p[i]. Falls back to the last strictly positive entry when
/// rounding leaves u beyond the accumulated total.
inline int sample_categorical(std::span<const double> probs, double u) {
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    return last_positive >= 0 ? last_positive : static_cast<int>(probs.size()) - 1;
}

}  // namespace actseq
