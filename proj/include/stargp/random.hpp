#pragma once

#include <cstdint>
#include <random>

namespace stargp {

/// Named RNG streams; a master seed is split per stage and per replicate so
/// results do not depend on the order in which streams are consumed.
enum class Stream : std::uint32_t {
  kSubsample = 1,
  kSimulate = 2,
  kMinibatch = 3,
  kSample = 4,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stage,
                                std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace stargp
