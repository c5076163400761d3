#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mset/cli/config.hpp"
#include "mset/datagen.hpp"
#include "mset/matching_loss.hpp"

namespace mset::cli {

struct DatasetVideo {
  std::string video_id;
  double duration = 0.0;
  double fps = 0.0;
  std::string split;
  std::vector<Narration> narrations;  // full-video time
  std::vector<VideoRecord> chunks;
};

struct Dataset {
  ConceptVocabulary vocab;
  std::vector<DatasetVideo> videos;
};

// Reads manifest.json, the vocabulary and every chunk file under dir.
Dataset load_dataset(const std::filesystem::path& dir);

// Whole-video record: concatenated chunk features, manifest narrations.
VideoRecord full_video(const DatasetVideo& video);

struct GenerateResult {
  std::filesystem::path manifest;
  std::size_t chunk_files = 0;
};

// Writes vocab.bin, chunks/*.bin and manifest.json into out. Refuses a
// non-empty directory unless force is set.
GenerateResult cmd_generate(const RunConfig& cfg, const std::filesystem::path& out, bool force);

struct TrainOutcome {
  std::filesystem::path final_checkpoint;
  std::filesystem::path log;
  std::size_t steps_run = 0;
  std::vector<StepResult> steps;
};

// Trains on the "train" split of cfg.dataset_dir. Checkpoints land in out
// as checkpoint_epoch<E>.bin every checkpoint_every epochs plus
// checkpoint_final.bin; train_log.csv gets one row per optimizer step.
// With `resume`, training continues from that checkpoint's step.
TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& out,
                       const std::optional<std::filesystem::path>& resume, std::ostream* progress = nullptr);

enum class Task { Recognition, Nlq };
Task parse_task(const std::string& name);
std::string task_name(Task task);

// Evaluates the checkpoint on cfg.eval_split of cfg.dataset_dir and writes
// eval_<task>.json (and nlq_queries.csv for NLQ) into out. Returns the report.
nlohmann::json cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, Task task,
                        const std::filesystem::path& out);

}  // namespace mset::cli
