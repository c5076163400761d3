#pragma once

#include <cstdint>
#include <filesystem>

#include "mset/cli/config.hpp"
#include "mset/model.hpp"
#include "mset/numerics/adam.hpp"

namespace mset::cli {

// Little-endian checkpoint file:
//   "MALC" | u32 version | u32 len + config JSON | u64 train step | u64 adam step
//   | u32 entry count | entries: u32 len + name, u32 rank, u64 dims…, binary64 payload
// Entries are the model parameters by name, then "adam.m.<name>" and
// "adam.v.<name>" moment tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  std::uint64_t step = 0;
  ModelParams params;
  num::AdamState optimizer;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mset::cli
