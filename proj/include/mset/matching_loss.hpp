#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mset/datagen.hpp"
#include "mset/hungarian.hpp"
#include "mset/model.hpp"
#include "mset/numerics/adam.hpp"
#include "mset/numerics/tensor.hpp"

namespace mset {

// Ground-truth moments Y: concept vectors and the unit-normalized temporal
// embeddings of the sampled start/end times. The temporal rows are read from
// the live table, so gradients reach it.
struct GroundTruthSet {
  num::Tensor lang;      // M × C
  num::Tensor te_start;  // M × d
  num::Tensor te_end;    // M × d
};

GroundTruthSet make_ground_truth(const ConceptVocabulary& vocab, std::span<const MomentSample> samples,
                                 const TemporalTable& table, double duration);

// Channel order everywhere: 0 = visual/language, 1 = start, 2 = end.
struct SimilarityMatrices {
  num::Tensor visual;  // N × M
  num::Tensor start;
  num::Tensor end;

  const num::Tensor& channel(std::size_t c) const { return c == 0 ? visual : (c == 1 ? start : end); }
};

// Pairwise dot products; ContractError if any row is off the unit sphere by
// more than 1e-6.
SimilarityMatrices similarity_matrices(const MomentPrediction& pred, const GroundTruthSet& gt);

// cost[i][j] = −σ(s_vis)·σ(s_start)·σ(s_end)
CostMatrix build_cost(const SimilarityMatrices& sims);

struct MatchResult {
  std::vector<std::size_t> assignment;  // ground truth j → query
  SimilarityMatrices sims;
  CostMatrix cost;
};

MatchResult match(const MomentPrediction& pred, const GroundTruthSet& gt);

// Mean over pairs of −log σ(z·(t·s + b)), z = +1 on matched pairs and −1
// elsewhere, summed over the three channels.
num::Tensor sigmoid_contrastive_loss(const SimilarityMatrices& sims, std::span<const std::size_t> assignment,
                                     const LossScales& scales);

// Per-channel similarity means: matched pairs, and pairs whose query is not
// assigned to any ground truth.
struct AlignmentStats {
  std::array<double, 3> matched{};
  std::array<double, 3> unmatched{};

  double matched_mean() const { return (matched[0] + matched[1] + matched[2]) / 3.0; }
  double unmatched_mean() const { return (unmatched[0] + unmatched[1] + unmatched[2]) / 3.0; }
};

AlignmentStats alignment_stats(const SimilarityMatrices& sims, std::span<const std::size_t> assignment);

// Loss of one chunk under the given samples. If `fixed_assignment` is
// non-null it replaces the Hungarian match (used for finite-difference checks).
struct ChunkLoss {
  num::Tensor loss;
  MatchResult match;
};

ChunkLoss chunk_loss(const VideoRecord& chunk, std::span<const MomentSample> samples, const ModelParams& params,
                     const ConceptVocabulary& vocab, const std::vector<std::size_t>* fixed_assignment = nullptr);

struct StepResult {
  double loss = 0.0;
  double matched_sim_mean = 0.0;
  double unmatched_sim_mean = 0.0;
  double temperature = 0.0;
  double bias = 0.0;
  std::size_t used_chunks = 0;
  std::vector<std::string> warnings;
};

// One optimizer step on a batch: per chunk, embed ground truth for its
// samples, forward, match, and take the mean loss over the batch. Chunks
// without narrations are skipped with a warning. NumericError on a
// non-finite loss (parameters untouched).
StepResult train_step(std::span<const VideoRecord> batch, std::span<const std::vector<MomentSample>> samples,
                      ModelParams& params, num::AdamState& optimizer, const ConceptVocabulary& vocab);

}  // namespace mset
