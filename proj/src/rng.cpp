#include "mixsig/rng.hpp"

#include <cmath>

namespace mixsig {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    // Mix seed and stream id so that nearby ids give unrelated states.
    std::uint64_t x = seed ^ 0x6a09e667f3bcc909ULL;
    x = splitmix64(x) ^ stream_id;
    for (auto& s : s_) s = splitmix64(x);
    // All-zero state would be absorbing for xoshiro; splitmix output of a
    // nonzero walk cannot produce it for all four words, but guard anyway.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller. u1 is kept away from 0 so the log is finite.
    double u1 = uniform();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

RngStream RngStream::derive(std::uint64_t child_id) const {
    // Children are keyed off (seed, stream_id, child_id); hashing the pair
    // keeps derive(a).derive(b) distinct from derive(b).derive(a).
    std::uint64_t x = stream_id_ ^ 0x9e3779b97f4a7c15ULL;
    std::uint64_t mixed = splitmix64(x) ^ (child_id * 0xd1342543de82ef95ULL + 1);
    return RngStream(seed_, splitmix64(mixed));
}

}  // namespace mixsig
