#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mset/model.hpp"
#include "mset/numerics/adam.hpp"

namespace mset::cli {

// Flat run configuration. JSON keys match the field names; unknown keys are
// rejected. Defaults are the desk-scale setup.
struct RunConfig {
  ModelConfig model;
  num::AdamOptions adam;

  // data generation
  std::size_t videos = 32;
  std::size_t holdout_videos = 8;
  double duration = 100.0;
  double fps = 6.0;
  std::size_t moments_per_video = 4;
  double noise_level = 0.1;
  std::size_t vocab_size = 16;
  double chunk_seconds = 50.0;

  // training
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  bool freeze_samples = false;
  std::size_t checkpoint_every = 1;  // epochs

  // evaluation
  std::vector<std::size_t> nlq_top_k = {1, 5};
  std::vector<double> iou_thresholds = {0.3, 0.5};
  std::string eval_split = "test";

  // paths and runtime (excluded from the echoed provenance block)
  std::string dataset_dir = "data";
  int workers = 0;

  // ConfigError naming the first violated rule.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg, bool include_runtime = true);
RunConfig from_json(const nlohmann::json& j);  // starts from defaults
RunConfig load_config(const std::filesystem::path& path);

// True when two configs describe the same model, optimizer, data and
// schedule, i.e. a checkpoint from one may resume under the other.
bool resume_compatible(const RunConfig& a, const RunConfig& b, std::string* why = nullptr);

// Stateless seed derivation (splitmix64 over the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace mset::cli
