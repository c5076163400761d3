// Serial vs OpenMP kernels, and the model's forward and training step at
// desk scale.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mset/datagen.hpp"
#include "mset/matching_loss.hpp"
#include "mset/model.hpp"
#include "mset/numerics/kernels.hpp"

using namespace mset;
namespace k = mset::num::kernels;

namespace {

std::vector<double> random_vec(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

template <auto Kernel>
void gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), n = m, kk = m;
  const auto a = random_vec(m * kk), b = random_vec(kk * n);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Kernel(a, b, c, m, kk, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * m * n * kk));
}

template <auto Kernel>
void softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), cols = std::size_t{256};
  const auto x = random_vec(rows * cols);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    Kernel(x, y, rows, cols);
    benchmark::DoNotOptimize(y.data());
  }
}

void forward_pass(benchmark::State& state) {
  const auto vocab = ConceptVocabulary::random(16, 64, 1);
  VideoSpec spec;
  spec.duration = static_cast<double>(state.range(0));
  const auto video = generate_video(vocab, spec, "bench");
  const auto params = ModelParams::init(ModelConfig{}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(video.features, params).visual.data().data());
}

void training_step(benchmark::State& state) {
  const auto vocab = ConceptVocabulary::random(16, 64, 1);
  std::vector<VideoRecord> batch;
  std::vector<std::vector<MomentSample>> samples;
  std::mt19937_64 rng(3);
  for (std::uint64_t i = 0; i < 8; ++i) {
    VideoSpec spec;
    spec.duration = 50.0;
    spec.seed = i;
    batch.push_back(generate_video(vocab, spec, "b"));
    samples.push_back(sample_intervals(batch.back().narrations, batch.back().duration, rng));
  }
  auto params = ModelParams::init(ModelConfig{}, 2);
  const auto tensors = params.tensors();
  num::AdamState adam(num::AdamOptions{}, tensors);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(batch, samples, params, adam, vocab).loss);
}

}  // namespace

BENCHMARK(gemm<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(gemm<k::omp::gemm_nn>)->Name("gemm_nn/omp")->Arg(64)->Arg(256)->Arg(512)->UseRealTime();
BENCHMARK(gemm<k::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(256);
BENCHMARK(gemm<k::omp::gemm_tn>)->Name("gemm_tn/omp")->Arg(256)->UseRealTime();
BENCHMARK(softmax<k::serial::softmax_rows>)->Name("softmax_rows/serial")->Arg(1024);
BENCHMARK(softmax<k::omp::softmax_rows>)->Name("softmax_rows/omp")->Arg(1024)->UseRealTime();
BENCHMARK(forward_pass)->Arg(50)->Arg(100)->Arg(600)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(training_step)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
