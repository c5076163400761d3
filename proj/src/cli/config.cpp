#include "mset/cli/config.hpp"

#include <fstream>

#include "mset/error.hpp"

namespace mset::cli {

using nlohmann::json;

void RunConfig::validate() const {
  model.validate();
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(adam.lr > 0.0)) fail("lr must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    fail("betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) fail("epsilon must be positive");
  if (videos == 0) fail("videos must be positive");
  if (holdout_videos > videos) fail("holdout_videos exceeds videos");
  if (!(duration > 0.0) || !(fps > 0.0)) fail("duration and fps must be positive");
  if (moments_per_video == 0) fail("moments_per_video must be positive");
  if (model.num_queries < moments_per_video)
    fail("num_queries (" + std::to_string(model.num_queries) + ") is below the maximum narrations per chunk (" +
         std::to_string(moments_per_video) + ")");
  if (!(noise_level >= 0.0)) fail("noise_level must be non-negative");
  if (vocab_size == 0) fail("vocab_size must be positive");
  if (!(chunk_seconds > 0.0)) fail("chunk_seconds must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (checkpoint_every == 0) fail("checkpoint_every must be positive");
  for (auto k : nlq_top_k)
    if (k == 0 || k > model.num_queries) fail("nlq_top_k entries must lie in [1, num_queries]");
  for (auto t : iou_thresholds)
    if (!(t > 0.0 && t <= 1.0)) fail("iou_thresholds must lie in (0, 1]");
  if (eval_split != "train" && eval_split != "test" && eval_split != "all")
    fail("eval_split must be train, test or all");
  if (workers < 0) fail("workers must be non-negative");
}

json to_json(const RunConfig& c, bool include_runtime) {
  json j = {
      {"feature_dim", c.model.feature_dim},
      {"model_dim", c.model.model_dim},
      {"conv_kernel", c.model.conv_kernel},
      {"enc_layers", c.model.enc_layers},
      {"dec_layers", c.model.dec_layers},
      {"heads", c.model.heads},
      {"head_dim", c.model.head_dim},
      {"num_queries", c.model.num_queries},
      {"te_rows", c.model.te_rows},
      {"ffn_hidden", c.model.ffn_hidden},
      {"lr", c.adam.lr},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"epsilon", c.adam.epsilon},
      {"videos", c.videos},
      {"holdout_videos", c.holdout_videos},
      {"duration", c.duration},
      {"fps", c.fps},
      {"moments_per_video", c.moments_per_video},
      {"noise_level", c.noise_level},
      {"vocab_size", c.vocab_size},
      {"chunk_seconds", c.chunk_seconds},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"freeze_samples", c.freeze_samples},
      {"checkpoint_every", c.checkpoint_every},
      {"nlq_top_k", c.nlq_top_k},
      {"iou_thresholds", c.iou_thresholds},
      {"eval_split", c.eval_split},
  };
  if (include_runtime) {
    j["dataset_dir"] = c.dataset_dir;
    j["workers"] = c.workers;
  }
  return j;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const json known = to_json(RunConfig{});
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  RunConfig c;
  read(j, "feature_dim", c.model.feature_dim);
  read(j, "model_dim", c.model.model_dim);
  read(j, "conv_kernel", c.model.conv_kernel);
  read(j, "enc_layers", c.model.enc_layers);
  read(j, "dec_layers", c.model.dec_layers);
  read(j, "heads", c.model.heads);
  read(j, "head_dim", c.model.head_dim);
  read(j, "num_queries", c.model.num_queries);
  read(j, "te_rows", c.model.te_rows);
  read(j, "ffn_hidden", c.model.ffn_hidden);
  read(j, "lr", c.adam.lr);
  read(j, "beta1", c.adam.beta1);
  read(j, "beta2", c.adam.beta2);
  read(j, "epsilon", c.adam.epsilon);
  read(j, "videos", c.videos);
  read(j, "holdout_videos", c.holdout_videos);
  read(j, "duration", c.duration);
  read(j, "fps", c.fps);
  read(j, "moments_per_video", c.moments_per_video);
  read(j, "noise_level", c.noise_level);
  read(j, "vocab_size", c.vocab_size);
  read(j, "chunk_seconds", c.chunk_seconds);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "freeze_samples", c.freeze_samples);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "nlq_top_k", c.nlq_top_k);
  read(j, "iou_thresholds", c.iou_thresholds);
  read(j, "eval_split", c.eval_split);
  read(j, "dataset_dir", c.dataset_dir);
  read(j, "workers", c.workers);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

bool resume_compatible(const RunConfig& a, const RunConfig& b, std::string* why) {
  const json ja = to_json(a, false), jb = to_json(b, false);
  for (const auto& [key, value] : ja.items()) {
    if (key == "nlq_top_k" || key == "iou_thresholds" || key == "eval_split") continue;
    if (jb.at(key) != value) {
      if (why) *why = "config field '" + key + "' differs (" + value.dump() + " vs " + jb.at(key).dump() + ")";
      return false;
    }
  }
  return true;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

}  // namespace mset::cli
