#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spikegrasp {

using Rng = std::mt19937_64;

// Derives an independent seed for the named substream of a root seed, so that
// e.g. environment spawns can be shared between runs that differ in policy
// initialization.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                             std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view name,
                    std::uint64_t index = 0) {
  return Rng(substream_seed(root, name, index));
}

}  // namespace spikegrasp
