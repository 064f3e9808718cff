#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ddpc {

// ============================================================================
// Seed derivation and random draws
// ============================================================================
// Reproducibility contract: every random quantity in the toolkit is drawn
// from an Rng whose seed is derived from a base seed plus an explicit stream
// path, e.g. derive_seed(base, {kTrainingStream, nbar_index, realization}).
// A stream can therefore be regenerated in isolation, independent of which
// other streams were consumed. Gaussians use an explicit Box-Muller transform
// on 53-bit uniforms; std::normal_distribution is implementation-defined and
// would not give a stable sequence.

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

// Hash-chain a base seed with a stream path.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the second draw of each pair is cached.
    double gaussian();
    double gaussian(double stddev) { return stddev * gaussian(); }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ddpc
