#include "mcran/rng.hpp"

#include <cmath>
#include <numbers>

namespace mcran {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id,
                     std::uint64_t substream) {
    std::uint64_t s = splitmix64(seed ^ hash_label(stream_id));
    s = splitmix64(s + 0x9e3779b97f4a7c15ULL * (substream + 1));
    gen_.seed(s);
}

double RngStream::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - (~0ULL % n + 1) % n;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x > limit);
    return x % n;
}

double RngStream::normal(double mean, double sigma) {
    if (have_spare_) {
        have_spare_ = false;
        return mean + sigma * spare_;
    }
    // u1 in (0,1] so log() stays finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + sigma * r * std::cos(theta);
}

double RngStream::exponential(double mean) {
    return -mean * std::log(1.0 - uniform());
}

} // namespace mcran
