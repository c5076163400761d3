#include "mset/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mset/cli/checkpoint.hpp"
#include "mset/error.hpp"
#include "mset/eval.hpp"
#include "mset/feature_store.hpp"
#include "mset/numerics/kernels.hpp"
#include "mset/numerics/tape.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mset::cli {

namespace {

// Seed-derivation tags keep the random streams of each stage independent.
constexpr std::uint64_t kVocabStream = 1;
constexpr std::uint64_t kVideoStream = 2;
constexpr std::uint64_t kModelStream = 3;
constexpr std::uint64_t kShuffleStream = 4;
constexpr std::uint64_t kSampleStream = 5;

std::string video_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "v%03zu", i);
  return buf;
}

json narrations_json(const std::vector<Narration>& ns) {
  json arr = json::array();
  for (const auto& n : ns) arr.push_back({{"concept_id", n.concept_id}, {"t", n.t}, {"a", n.a}, {"b", n.b}});
  return arr;
}

std::vector<Narration> narrations_from(const json& arr) {
  std::vector<Narration> out;
  for (const auto& n : arr)
    out.push_back({n.at("concept_id").get<std::uint32_t>(), n.at("t").get<double>(), n.at("a").get<double>(),
                   n.at("b").get<double>()});
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Runs body(i) for i in [0, n) across `workers` OpenMP threads and rethrows
// the first failure (by index) afterwards.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
  const int threads = workers > 0 ? workers : num::kernels::max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  (void)threads;
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("no manifest at " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Kind::Malformed, "manifest is not valid JSON: " + std::string(e.what()));
  }
  Dataset ds;
  try {
    ds.vocab = load_vocabulary(dir / manifest.at("vocabulary").get<std::string>());
    for (const auto& v : manifest.at("videos")) {
      DatasetVideo video;
      video.video_id = v.at("video_id").get<std::string>();
      video.duration = v.at("duration").get<double>();
      video.fps = v.at("fps").get<double>();
      video.split = v.at("split").get<std::string>();
      video.narrations = narrations_from(v.at("narrations"));
      for (const auto& c : v.at("chunks"))
        video.chunks.push_back(load_record(dir / c.at("path").get<std::string>(), c.at("video_id").get<std::string>(),
                                           c.at("duration").get<double>(), video.fps));
      ds.videos.push_back(std::move(video));
    }
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Kind::Malformed, "manifest field error: " + std::string(e.what()));
  }
  return ds;
}

VideoRecord full_video(const DatasetVideo& video) {
  VideoRecord rec = concat_chunks(video.chunks, video.video_id);
  rec.duration = video.duration;
  rec.narrations = video.narrations;
  return rec;
}

GenerateResult cmd_generate(const RunConfig& cfg, const fs::path& out, bool force) {
  cfg.validate();
  if (fs::exists(out) && !fs::is_directory(out)) throw IoError(out.string() + " exists and is not a directory");
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw Error("refused", "output directory " + out.string() + " is not empty (use --force)");
    fs::remove(out / "manifest.json");
    fs::remove(out / "vocab.bin");
    fs::remove_all(out / "chunks");
  }
  fs::create_directories(out / "chunks");

  const auto vocab = ConceptVocabulary::random(cfg.vocab_size, cfg.model.feature_dim, derive_seed(cfg.seed, kVocabStream));
  store_vocabulary(vocab, out / "vocab.bin");

  std::vector<json> entries(cfg.videos);
  std::vector<std::size_t> chunk_counts(cfg.videos);
  parallel_for(cfg.videos, cfg.workers, [&](std::size_t i) {
    VideoSpec spec;
    spec.moments = cfg.moments_per_video;
    spec.duration = cfg.duration;
    spec.fps = cfg.fps;
    spec.noise_level = cfg.noise_level;
    spec.seed = derive_seed(cfg.seed, kVideoStream, i);
    const auto record = generate_video(vocab, spec, video_name(i));
    const auto chunks = chunk_video(record, cfg.chunk_seconds);
    json chunk_list = json::array();
    double offset = 0.0;
    for (const auto& c : chunks) {
      const std::string rel = "chunks/" + c.video_id + ".bin";
      store_record(c, out / rel);
      chunk_list.push_back({{"video_id", c.video_id}, {"path", rel}, {"duration", c.duration}, {"offset", offset}});
      offset += c.duration;
    }
    entries[i] = {{"video_id", record.video_id},
                  {"duration", record.duration},
                  {"fps", record.fps},
                  {"split", i + cfg.holdout_videos >= cfg.videos ? "test" : "train"},
                  {"narrations", narrations_json(record.narrations)},
                  {"chunks", chunk_list}};
    chunk_counts[i] = chunks.size();
  });

  json manifest = {{"format", "mset-manifest"},
                   {"version", 1},
                   {"vocabulary", "vocab.bin"},
                   {"feature_dim", cfg.model.feature_dim},
                   {"config", to_json(cfg, false)},
                   {"videos", entries}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return {out / "manifest.json", std::accumulate(chunk_counts.begin(), chunk_counts.end(), std::size_t{0})};
}

TrainOutcome cmd_train(const RunConfig& cfg, const fs::path& out, const std::optional<fs::path>& resume,
                       std::ostream* progress) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg.dataset_dir);
  if (ds.vocab.dim() != cfg.model.feature_dim)
    throw Error("mismatch", "dataset feature width " + std::to_string(ds.vocab.dim()) + " != feature_dim " +
                                std::to_string(cfg.model.feature_dim));
  std::vector<VideoRecord> chunks;
  for (const auto& v : ds.videos)
    if (v.split == "train")
      for (const auto& c : v.chunks) {
        if (c.narrations.size() > cfg.model.num_queries)
          throw ConfigError("num_queries (" + std::to_string(cfg.model.num_queries) + ") is below the " +
                            std::to_string(c.narrations.size()) + " narrations of chunk " + c.video_id);
        chunks.push_back(c);
      }
  if (chunks.empty()) throw Error("mismatch", "dataset has no training chunks");

  Checkpoint state;
  if (resume) {
    state = load_checkpoint(*resume);
    std::string why;
    if (!resume_compatible(state.config, cfg, &why)) throw Error("mismatch", "cannot resume: " + why);
  } else {
    state.params = ModelParams::init(cfg.model, derive_seed(cfg.seed, kModelStream));
    const auto tensors = state.params.tensors();
    state.optimizer = num::AdamState(cfg.adam, tensors);
  }
  state.config = cfg;

  fs::create_directories(out);
  write_text(out / "config.json", to_json(cfg).dump(2) + "\n");
  const fs::path log_path = out / "train_log.csv";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot open " + log_path.string());
  log << "step,loss,matched_sim_mean,unmatched_sim_mean,t,b\n";

  const std::size_t per_epoch = (chunks.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = cfg.epochs * per_epoch;
  TrainOutcome outcome;
  outcome.log = log_path;
  fs::path last_good;

  std::vector<std::size_t> order(chunks.size());
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  for (std::size_t s = state.step; s < total; ++s) {
    const std::size_t epoch = s / per_epoch, slot = s % per_epoch;
    if (epoch != order_epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, kShuffleStream, epoch));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      order_epoch = epoch;
    }
    const std::size_t begin = slot * cfg.batch_size;
    const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
    std::vector<VideoRecord> batch;
    std::vector<std::vector<MomentSample>> samples;
    for (std::size_t b = begin; b < end; ++b) {
      const auto& chunk = chunks[order[b]];
      std::mt19937_64 rng(
          derive_seed(derive_seed(cfg.seed, kSampleStream, cfg.freeze_samples ? 0 : epoch + 1), order[b]));
      batch.push_back(chunk);
      samples.push_back(sample_intervals(chunk.narrations, chunk.duration, rng));
    }

    StepResult r;
    try {
      r = train_step(batch, samples, state.params, state.optimizer, ds.vocab);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(s + 1) + "; last good checkpoint: " +
                         (last_good.empty() ? std::string("none") : last_good.string()));
    }
    state.step = s + 1;
    if (progress)
      for (const auto& w : r.warnings) *progress << "warning: " << w << '\n';
    log << state.step << ',' << csv_number(r.loss) << ',' << csv_number(r.matched_sim_mean) << ','
        << csv_number(r.unmatched_sim_mean) << ',' << csv_number(r.temperature) << ',' << csv_number(r.bias) << '\n';
    outcome.steps.push_back(r);
    outcome.steps_run += 1;

    if (state.step % per_epoch == 0) {
      const std::size_t done = state.step / per_epoch;
      if (progress) *progress << "epoch " << done << "/" << cfg.epochs << " loss " << r.loss << '\n';
      if (done % cfg.checkpoint_every == 0) {
        last_good = out / ("checkpoint_epoch" + std::to_string(done) + ".bin");
        save_checkpoint(state, last_good);
      }
    }
  }
  log.flush();
  outcome.final_checkpoint = out / "checkpoint_final.bin";
  save_checkpoint(state, outcome.final_checkpoint);
  return outcome;
}

Task parse_task(const std::string& name) {
  if (name == "recognition") return Task::Recognition;
  if (name == "nlq") return Task::Nlq;
  throw ConfigError("unknown task '" + name + "' (expected recognition or nlq)");
}

std::string task_name(Task task) { return task == Task::Recognition ? "recognition" : "nlq"; }

json cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, Task task, const fs::path& out) {
  cfg.validate();
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const ModelParams& params = ckpt.params;
  const Dataset ds = load_dataset(cfg.dataset_dir);
  if (ds.vocab.dim() != params.config.feature_dim)
    throw Error("mismatch", "dataset feature width " + std::to_string(ds.vocab.dim()) +
                                " does not match the checkpoint's feature_dim " +
                                std::to_string(params.config.feature_dim));

  std::vector<const DatasetVideo*> videos;
  for (const auto& v : ds.videos)
    if (cfg.eval_split == "all" || v.split == cfg.eval_split) videos.push_back(&v);
  if (videos.empty()) throw Error("mismatch", "dataset has no videos in split '" + cfg.eval_split + "'");
  for (auto k : cfg.nlq_top_k)
    if (k > params.config.num_queries)
      throw ConfigError("nlq_top_k " + std::to_string(k) + " exceeds the checkpoint's num_queries");

  std::vector<MomentPrediction> preds(videos.size());
  std::vector<VideoRecord> records(videos.size());
  parallel_for(videos.size(), cfg.workers, [&](std::size_t i) {
    num::NoGradScope no_grad;
    records[i] = full_video(*videos[i]);
    preds[i] = forward(records[i].features, params);
  });

  json report = {{"task", task_name(task)},
                 {"checkpoint_step", ckpt.step},
                 {"split", cfg.eval_split},
                 {"videos", videos.size()},
                 {"map", nullptr},
                 {"recall", nullptr},
                 {"config", to_json(ckpt.config, false)}};
  fs::create_directories(out);

  if (task == Task::Recognition) {
    const std::size_t k = ds.vocab.size();
    std::vector<double> scores(videos.size() * k);
    std::vector<char> labels(videos.size() * k, 0);
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const auto s = recognition_scores(preds[v], ds.vocab.vectors());
      std::copy(s.begin(), s.end(), scores.begin() + static_cast<std::ptrdiff_t>(v * k));
      for (const auto& n : records[v].narrations) labels[v * k + n.concept_id] = 1;
    }
    const MapResult m = video_map(scores, labels, videos.size(), k);
    if (m.evaluated_classes == 0) throw Error("mismatch", "no class has a positive video in this split");
    report["map"] = m.map;
    report["classes_evaluated"] = m.evaluated_classes;
    report["warnings"] = m.warnings;
  } else {
    const std::size_t max_k = *std::max_element(cfg.nlq_top_k.begin(), cfg.nlq_top_k.end());
    std::vector<Interval> gts;
    std::vector<std::vector<Interval>> lists;
    std::ostringstream csv;
    csv << "video_id,concept_id,gt_start,gt_end,top1_start,top1_end,top1_iou,best_iou_top" << max_k << '\n';
    for (std::size_t v = 0; v < videos.size(); ++v) {
      for (const auto& n : records[v].narrations) {
        const Interval gt{n.a, n.b};
        auto list = nlq_infer(preds[v], ds.vocab.vector(n.concept_id), params.temporal, records[v].duration, max_k);
        double best = 0.0;
        for (const auto& iv : list) best = std::max(best, temporal_iou(iv, gt));
        csv << records[v].video_id << ',' << n.concept_id << ',' << csv_number(gt.start) << ','
            << csv_number(gt.end) << ',' << csv_number(list[0].start) << ',' << csv_number(list[0].end) << ','
            << csv_number(temporal_iou(list[0], gt)) << ',' << csv_number(best) << '\n';
        gts.push_back(gt);
        lists.push_back(std::move(list));
      }
    }
    if (gts.empty()) throw Error("mismatch", "split '" + cfg.eval_split + "' has no NLQ queries");
    json recall = json::object();
    for (auto k : cfg.nlq_top_k) {
      json row = json::object();
      for (auto thr : cfg.iou_thresholds) {
        char key[16];
        std::snprintf(key, sizeof key, "%g", thr);
        row[key] = nlq_recall(gts, lists, k, thr);
      }
      recall[std::to_string(k)] = row;
    }
    report["recall"] = recall;
    report["queries"] = gts.size();
    write_text(out / "nlq_queries.csv", csv.str());
  }
  write_text(out / ("eval_" + task_name(task) + ".json"), report.dump(2) + "\n");
  return report;
}

}  // namespace mset::cli
