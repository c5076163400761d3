// Command-line entry point: generate / train / eval.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mset/cli/commands.hpp"
#include "mset/error.hpp"
#include "mset/numerics/kernels.hpp"

namespace {

int exit_code_for(const std::string& category) {
  if (category == "config") return 2;
  if (category == "refused") return 3;
  if (category == "io" || category.rfind("load", 0) == 0) return 4;
  if (category == "numeric") return 5;
  if (category == "mismatch") return 6;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-set video-language pre-training on synthetic feature stores"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string data_dir;
  std::string checkpoint;
  std::string task = "recognition";
  int workers = -1;
  bool force = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "Master seed (overrides config)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--data", data_dir, "Dataset directory (overrides config dataset_dir)");
    sub->add_option("--workers", workers, "Worker threads for generation/evaluation (0 = all cores)");
  };
  auto* gen = app.add_subcommand("generate", "Generate a synthetic feature store");
  add_common(gen);
  gen->add_flag("--force", force, "Overwrite a non-empty output directory");
  auto* train = app.add_subcommand("train", "Train from a feature store");
  add_common(train);
  train->add_option("--checkpoint", checkpoint, "Resume from this checkpoint");
  auto* eval = app.add_subcommand("eval", "Zero-shot evaluation of a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--task", task, "recognition or nlq")->check(CLI::IsMember({"recognition", "nlq"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: config: " << e.what() << '\n';
    return exit_code_for("config");
  }

  try {
    mset::cli::RunConfig cfg = config_path.empty() ? mset::cli::RunConfig{} : mset::cli::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!data_dir.empty()) cfg.dataset_dir = data_dir;
    if (workers >= 0) cfg.workers = workers;
    cfg.validate();
    // Training stays on the default kernel thread count; --workers sizes generation and evaluation.
    if (cfg.workers > 0 && !*train) mset::num::kernels::set_threads(cfg.workers);

    if (*gen) {
      const auto r = mset::cli::cmd_generate(cfg, out_dir, force);
      std::cout << "wrote " << r.chunk_files << " chunk files; manifest " << r.manifest.string() << '\n';
    } else if (*train) {
      std::optional<std::filesystem::path> resume;
      if (!checkpoint.empty()) resume = checkpoint;
      const auto r = mset::cli::cmd_train(cfg, out_dir, resume, &std::cerr);
      std::cout << "trained " << r.steps_run << " steps; checkpoint " << r.final_checkpoint.string() << "; log "
                << r.log.string() << '\n';
    } else if (*eval) {
      const auto report = mset::cli::cmd_eval(cfg, checkpoint, mset::cli::parse_task(task), out_dir);
      std::cout << report.dump(2) << '\n';
    }
  } catch (const mset::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
