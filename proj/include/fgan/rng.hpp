#pragma once

#include <cstdint>
#include <string_view>

namespace fgan {

// Deterministic PRNG (xoshiro256++) with hand-rolled uniform/normal draws.
// The standard <random> distributions are implementation-defined, so seeded
// runs would not be reproducible across standard libraries; everything that
// feeds simulation results goes through this class instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();

    // Standard normal via Box-Muller; draws are pairwise cached.
    double next_normal();

    // Uniform index in [0, n); n must be > 0.
    std::size_t next_index(std::size_t n);

    // Bernoulli with probability p (clamped to [0,1]).
    bool next_bernoulli(double p);

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Derives an independent stream seed from a base seed, a purpose tag and up
// to three indices. Stable across runs; used to give every node / stream in
// the simulation its own reproducible generator.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace fgan
