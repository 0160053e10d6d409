#pragma once

#include <cstdint>
#include <filesystem>

#include "uavfl/lsnet/model.hpp"

namespace uavfl::lsnet {

/// Container format: a magic line, a little-endian u64 header length, a
/// JSON header listing each parameter's name, shape, dtype, byte offset
/// plus the model config and build seed, then the concatenated raw
/// little-endian float32 arrays. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const LSNetConfig& config, std::uint64_t build_seed);

struct Checkpoint {
  ParameterSet<float> params;
  LSNetConfig config;
  std::uint64_t build_seed = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uavfl::lsnet
