#pragma once

// Stateless counter-based random stream: every draw is addressed by
// (seed, event index, draw index), so serial and sharded runs produce
// bit-identical results regardless of the shard/thread layout.

#include <cstdint>

namespace diqkd {

namespace detail {

// 64-bit finalizer (murmur3 variant); full avalanche per draw.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

} // namespace detail

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    std::uint64_t word(std::uint64_t event, std::uint32_t draw) const {
        std::uint64_t c = event * 0xbf58476d1ce4e5b9ULL + draw;
        return detail::mix64(key_ ^ detail::mix64(c + 0x94d049bb133111ebULL));
    }

    // uniform double in [0, 1)
    double uniform(std::uint64_t event, std::uint32_t draw) const {
        return static_cast<double>(word(event, draw) >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p, std::uint64_t event, std::uint32_t draw) const {
        return uniform(event, draw) < p;
    }

  private:
    std::uint64_t key_;
};

} // namespace diqkd
