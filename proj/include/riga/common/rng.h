#pragma once

#include <cstdint>
#include <string_view>

namespace riga {

/**
 * Counter-based 64-bit generator ("splitmix64-ctr").
 *
 * Output n (1-based) is splitmix64_finalize(seed + n * 0x9E3779B97F4A7C15).
 * The whole state is (seed, counter), so any stream can be reproduced in
 * another language from those two integers. Gaussians use the cosine branch
 * of Box-Muller and consume exactly two uniforms each.
 */
class CounterRng {
public:
    static constexpr std::string_view kName = "splitmix64-ctr";

    explicit CounterRng(std::uint64_t seed = 0, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    /// Independent stream derived from this generator's seed and a tag.
    CounterRng fork(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);

/// FNV-1a over bytes; used for sequence hashes and stub embeddings.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace riga
