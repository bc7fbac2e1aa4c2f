#pragma once

// Binary checkpoint of an actor-critic pair.
//
// Layout (little-endian, no padding):
//   char[8]  magic "SPKGRASP"
//   u32      format version (1)
//   u32      model kind (0 = snn, 1 = ann)
//   i32 x 6  n0, n1, n2, steps, encoder (0 current, 1 latency),
//            surrogate kind (0 rectangular, 1 fast sigmoid)
//   f64 x 11 lif lambda, resistance, threshold, dt, v_reset,
//            nlif lambda, v_clip, dt, surrogate width,
//            init_gain_in, init_gain_out
//   f64[]    actor w_in (n0 x n1), actor w_out (n1 x n2), actor log_std (n2),
//            critic w_in (n0 x n1), critic w_out (n1 x 1); matrices row-major
//   u64      FNV-1a hash of every preceding byte

#include <cstdint>
#include <filesystem>
#include <string>

#include "spikegrasp/network.hpp"

namespace spikegrasp {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'K', 'G',
                                             'R', 'A', 'S', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ActorCritic& agent);
// Throws spikegrasp::Error on bad magic, version, truncation or checksum.
ActorCritic deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const ActorCritic& agent, const std::filesystem::path& path);
ActorCritic load_checkpoint(const std::filesystem::path& path);

}  // namespace spikegrasp
