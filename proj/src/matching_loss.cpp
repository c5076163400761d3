#include "mset/matching_loss.hpp"

#include <cmath>

#include "mset/error.hpp"
#include "mset/numerics/ops.hpp"
#include "mset/numerics/tape.hpp"

namespace mset {

using num::Tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_unit_rows(const Tensor& t, const char* what) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double ss = 0.0;
    for (double v : t.row_span(r)) ss += v * v;
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-6)
      throw ContractError(std::string("similarity_matrices: ") + what + " row " + std::to_string(r) +
                          " has norm " + std::to_string(std::sqrt(ss)));
  }
}

}  // namespace

GroundTruthSet make_ground_truth(const ConceptVocabulary& vocab, std::span<const MomentSample> samples,
                                 const TemporalTable& table, double duration) {
  if (samples.empty()) throw RangeError("make_ground_truth: no moments");
  const std::size_t m = samples.size(), c = vocab.dim();
  std::vector<double> lang(m * c);
  std::vector<double> starts(m), ends(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (samples[j].concept_id >= vocab.size()) throw RangeError("make_ground_truth: concept id out of vocabulary");
    const auto v = vocab.vector(samples[j].concept_id);
    std::copy(v.begin(), v.end(), lang.begin() + static_cast<std::ptrdiff_t>(j * c));
    starts[j] = samples[j].start;
    ends[j] = samples[j].end;
  }
  GroundTruthSet gt;
  gt.lang = num::l2_normalize_rows(Tensor({m, c}, std::move(lang)));
  gt.te_start = num::l2_normalize_rows(embed_timestamps(table, starts, duration));
  gt.te_end = num::l2_normalize_rows(embed_timestamps(table, ends, duration));
  return gt;
}

SimilarityMatrices similarity_matrices(const MomentPrediction& pred, const GroundTruthSet& gt) {
  require_unit_rows(pred.visual, "predicted visual");
  require_unit_rows(pred.te_start, "predicted start");
  require_unit_rows(pred.te_end, "predicted end");
  require_unit_rows(gt.lang, "ground-truth language");
  require_unit_rows(gt.te_start, "ground-truth start");
  require_unit_rows(gt.te_end, "ground-truth end");
  return {num::matmul_nt(pred.visual, gt.lang), num::matmul_nt(pred.te_start, gt.te_start),
          num::matmul_nt(pred.te_end, gt.te_end)};
}

CostMatrix build_cost(const SimilarityMatrices& sims) {
  const auto& shape = sims.visual.shape();
  if (sims.start.shape() != shape || sims.end.shape() != shape)
    throw DimensionError("build_cost: similarity matrices differ in shape");
  CostMatrix cost{shape[0], shape[1], std::vector<double>(sims.visual.size())};
  const auto a = sims.visual.data(), b = sims.start.data(), c = sims.end.data();
  for (std::size_t i = 0; i < cost.values.size(); ++i)
    cost.values[i] = -sigmoid(a[i]) * sigmoid(b[i]) * sigmoid(c[i]);
  return cost;
}

MatchResult match(const MomentPrediction& pred, const GroundTruthSet& gt) {
  MatchResult r;
  r.sims = similarity_matrices(pred, gt);
  r.cost = build_cost(r.sims);
  r.assignment = hungarian(r.cost);
  return r;
}

Tensor sigmoid_contrastive_loss(const SimilarityMatrices& sims, std::span<const std::size_t> assignment,
                                const LossScales& scales) {
  const std::size_t n = sims.visual.shape()[0], m = sims.visual.shape()[1];
  if (assignment.size() != m) throw DimensionError("sigmoid_contrastive_loss: assignment size != M");
  std::vector<double> labels(n * m, -1.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (assignment[j] >= n) throw RangeError("sigmoid_contrastive_loss: assignment out of range");
    labels[assignment[j] * m + j] = 1.0;
  }
  const Tensor z({n, m}, std::move(labels));
  const Tensor t = num::exp(scales.log_temperature);
  Tensor total;
  for (std::size_t c = 0; c < 3; ++c) {
    const Tensor logits = num::add(num::mul(sims.channel(c), t), scales.bias);
    const Tensor channel = num::neg(num::mean(num::log_sigmoid(num::mul(logits, z))));
    total = c == 0 ? channel : num::add(total, channel);
  }
  return total;
}

AlignmentStats alignment_stats(const SimilarityMatrices& sims, std::span<const std::size_t> assignment) {
  const std::size_t n = sims.visual.shape()[0], m = sims.visual.shape()[1];
  std::vector<char> assigned(n, 0);
  for (auto i : assignment) assigned[i] = 1;
  AlignmentStats s;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& mat = sims.channel(c);
    double ms = 0.0, us = 0.0;
    std::size_t un = 0;
    for (std::size_t j = 0; j < m; ++j) ms += mat.at(assignment[j], j);
    for (std::size_t i = 0; i < n; ++i) {
      if (assigned[i]) continue;
      for (std::size_t j = 0; j < m; ++j) us += mat.at(i, j);
      un += m;
    }
    s.matched[c] = ms / static_cast<double>(m);
    s.unmatched[c] = un ? us / static_cast<double>(un) : 0.0;
  }
  return s;
}

ChunkLoss chunk_loss(const VideoRecord& chunk, std::span<const MomentSample> samples, const ModelParams& params,
                     const ConceptVocabulary& vocab, const std::vector<std::size_t>* fixed_assignment) {
  const GroundTruthSet gt = make_ground_truth(vocab, samples, params.temporal, chunk.duration);
  const MomentPrediction pred = forward(chunk.features, params);
  ChunkLoss out;
  out.match.sims = similarity_matrices(pred, gt);
  out.match.cost = build_cost(out.match.sims);
  out.match.assignment = fixed_assignment ? *fixed_assignment : hungarian(out.match.cost);
  out.loss = sigmoid_contrastive_loss(out.match.sims, out.match.assignment, params.scales);
  return out;
}

StepResult train_step(std::span<const VideoRecord> batch, std::span<const std::vector<MomentSample>> samples,
                      ModelParams& params, num::AdamState& optimizer, const ConceptVocabulary& vocab) {
  if (samples.size() != batch.size()) throw DimensionError("train_step: one sample set per chunk required");
  auto tensors = params.tensors();
  for (auto& t : tensors) t.zero_grad();

  StepResult result;
  num::Tape tape;
  Tensor total;
  {
    num::TapeScope scope(tape);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (batch[b].narrations.empty()) {
        result.warnings.push_back("chunk " + batch[b].video_id + " has no narrations; skipped");
        continue;
      }
      if (batch[b].narrations.size() > params.config.num_queries)
        throw CapacityError("chunk " + batch[b].video_id + " has " + std::to_string(batch[b].narrations.size()) +
                            " narrations but only " + std::to_string(params.config.num_queries) + " queries");
      ChunkLoss cl = chunk_loss(batch[b], samples[b], params, vocab);
      const AlignmentStats st = alignment_stats(cl.match.sims, cl.match.assignment);
      result.matched_sim_mean += st.matched_mean();
      result.unmatched_sim_mean += st.unmatched_mean();
      total = result.used_chunks == 0 ? cl.loss : num::add(total, cl.loss);
      result.used_chunks += 1;
    }
    if (result.used_chunks == 0) {
      result.warnings.push_back("batch has no usable chunks; no update");
      return result;
    }
    total = num::scale(total, 1.0 / static_cast<double>(result.used_chunks));
  }
  result.loss = total.item();
  if (!std::isfinite(result.loss)) throw NumericError("train_step: non-finite loss " + std::to_string(result.loss));
  tape.backward(total);
  num::adam_step(tensors, optimizer);

  const double used = static_cast<double>(result.used_chunks);
  result.matched_sim_mean /= used;
  result.unmatched_sim_mean /= used;
  result.temperature = params.scales.temperature();
  result.bias = params.scales.bias.item();
  return result;
}

}  // namespace mset
