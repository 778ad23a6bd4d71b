#pragma once

#include <cstdint>

namespace mixsig {

// Reproducible random stream keyed by (seed, stream_id).
//
// Every stochastic routine in the library takes one of these explicitly, so a
// run is fully determined by the top-level seed plus the tree of derived
// stream ids. The generator is xoshiro256++ with state seeded through
// SplitMix64; normals come from Box-Muller with a cached spare. Everything is
// implemented here rather than via <random> distributions so that the
// bit-for-bit reproducibility contract does not depend on the standard
// library vendor.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53 random bits.
    double uniform();

    // Standard normal draw.
    double normal();

    // Uniform integer on {0, ..., n-1}, unbiased (rejection on the tail).
    std::uint64_t below(std::uint64_t n);

    // Independent child stream; child_id values give distinct streams.
    RngStream derive(std::uint64_t child_id) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixsig
