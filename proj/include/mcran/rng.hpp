#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mcran {

// Named random stream. Same (seed, stream_id, substream) produces the same
// draw sequence on every platform: the generator is mt19937_64 (bit-exact by
// the standard) and all distributions are implemented here instead of using
// std::*_distribution, whose output is implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view stream_id,
              std::uint64_t substream = 0);

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n). n must be > 0. Rejection sampling, no
    // modulo bias.
    std::uint64_t uniform_int(std::uint64_t n);

    // Gaussian via Box-Muller; caches the second deviate.
    double normal(double mean, double sigma);

    // Exponential with the given mean.
    double exponential(double mean);

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable 64-bit hash of a stream label (FNV-1a).
std::uint64_t hash_label(std::string_view label);

} // namespace mcran
