#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mset/model.hpp"
#include "mset/numerics/tensor.hpp"
#include "mset/temporal_embedding.hpp"

namespace mset {

// score_c = (1/N) Σ_i ⟨visual_i, class_c⟩
std::vector<double> recognition_scores(const MomentPrediction& pred, const num::Tensor& class_vectors);

struct MapResult {
  double map = 0.0;
  std::vector<double> per_class_ap;  // NaN for classes without positives
  std::size_t evaluated_classes = 0;
  std::vector<std::string> warnings;
};

// Average precision of one ranking: mean of precision at each positive's
// rank. Videos are ranked by descending score, ties in original order.
double average_precision(std::span<const double> scores, std::span<const char> positives);

// scores: V × K row-major, labels: V × K (nonzero = positive).
MapResult video_map(std::span<const double> scores, std::span<const char> labels, std::size_t videos,
                    std::size_t classes);

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

// Top-K queries by ⟨visual_i, query⟩; each decoded against the base table.
std::vector<Interval> nlq_infer(const MomentPrediction& pred, std::span<const double> query_vec,
                                const TemporalTable& table, double duration, std::size_t top_k);

// Query indices sorted by descending similarity, ties by index.
std::vector<std::size_t> rank_queries(const MomentPrediction& pred, std::span<const double> query_vec);

double temporal_iou(Interval p, Interval g);

// Fraction of queries whose top-K list holds an interval with IoU ≥ threshold.
double nlq_recall(std::span<const Interval> ground_truth, std::span<const std::vector<Interval>> predictions,
                  std::size_t top_k, double iou_threshold);

}  // namespace mset
