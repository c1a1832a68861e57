#pragma once

#include <cstdint>
#include <cstddef>

namespace mirrorsym {

// Deterministic random stream keyed by (seed, stream_id).
//
// Generator: xoshiro256++ with state derived from (seed, stream_id) through
// splitmix64. The same (seed, stream_id) produces the same sequence on every
// run and platform for a given build; distinct stream_ids give statistically
// independent streams, so parallel work can partition streams instead of
// sharing one.
//
// Gaussian draws use the Box-Muller transform, cosine branch: two uniforms
// u1 in (0,1], u2 in [0,1) map to sqrt(-2 ln u1) * cos(2 pi u2). The sine
// twin is discarded, keeping the stream stateless between calls.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Independent stream derived from this stream's identity and `key`.
    RngStream fork(std::uint64_t key) const;

    std::uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double gaussian();                     // N(0, 1)
    double gaussian(double mean, double sd);
    std::size_t index(std::size_t n);      // uniform in [0, n), n > 0

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
};

}  // namespace mirrorsym
