#include "mset/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mset/error.hpp"

namespace mset {

std::vector<double> recognition_scores(const MomentPrediction& pred, const num::Tensor& class_vectors) {
  const std::size_t n = pred.visual.shape()[0], c = pred.visual.shape()[1];
  if (class_vectors.cols() != c)
    throw DimensionError("recognition_scores: class vectors have width " + std::to_string(class_vectors.cols()) +
                         ", predictions " + std::to_string(c));
  const std::size_t k = class_vectors.rows();
  std::vector<double> scores(k, 0.0);
  for (std::size_t cls = 0; cls < k; ++cls) {
    const auto cv = class_vectors.row_span(cls);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = pred.visual.row_span(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += v[j] * cv[j];
      total += dot;
    }
    scores[cls] = total / static_cast<double>(n);
  }
  return scores;
}

double average_precision(std::span<const double> scores, std::span<const char> positives) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return hits ? total / static_cast<double>(hits) : std::numeric_limits<double>::quiet_NaN();
}

MapResult video_map(std::span<const double> scores, std::span<const char> labels, std::size_t videos,
                    std::size_t classes) {
  if (scores.size() != videos * classes || labels.size() != videos * classes)
    throw DimensionError("video_map: scores/labels must be V×K");
  MapResult r;
  r.per_class_ap.assign(classes, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> col(videos);
  std::vector<char> pos(videos);
  double total = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    bool any = false;
    for (std::size_t v = 0; v < videos; ++v) {
      col[v] = scores[v * classes + k];
      pos[v] = labels[v * classes + k] ? 1 : 0;
      any = any || pos[v];
    }
    if (!any) {
      r.warnings.push_back("class " + std::to_string(k) + " has no positives; excluded from mAP");
      continue;
    }
    r.per_class_ap[k] = average_precision(col, pos);
    total += r.per_class_ap[k];
    r.evaluated_classes += 1;
  }
  r.map = r.evaluated_classes ? total / static_cast<double>(r.evaluated_classes)
                              : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<std::size_t> rank_queries(const MomentPrediction& pred, std::span<const double> query_vec) {
  const std::size_t n = pred.visual.shape()[0], c = pred.visual.shape()[1];
  if (query_vec.size() != c) throw DimensionError("nlq_infer: query vector width mismatch");
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = pred.visual.row_span(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += v[j] * query_vec[j];
    sims[i] = dot;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  return order;
}

std::vector<Interval> nlq_infer(const MomentPrediction& pred, std::span<const double> query_vec,
                                const TemporalTable& table, double duration, std::size_t top_k) {
  const std::size_t n = pred.visual.shape()[0];
  if (top_k > n) throw RangeError("nlq_infer: K=" + std::to_string(top_k) + " exceeds N=" + std::to_string(n));
  const auto order = rank_queries(pred, query_vec);
  std::vector<Interval> out;
  out.reserve(top_k);
  for (std::size_t r = 0; r < top_k; ++r) {
    const std::size_t i = order[r];
    Interval iv{decode_timestamp(pred.te_start.row_span(i), table, duration),
                decode_timestamp(pred.te_end.row_span(i), table, duration)};
    if (iv.start > iv.end) std::swap(iv.start, iv.end);
    out.push_back(iv);
  }
  return out;
}

double temporal_iou(Interval p, Interval g) {
  const double inter = std::max(0.0, std::min(p.end, g.end) - std::max(p.start, g.start));
  const double uni = (p.end - p.start) + (g.end - g.start) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double nlq_recall(std::span<const Interval> ground_truth, std::span<const std::vector<Interval>> predictions,
                  std::size_t top_k, double iou_threshold) {
  if (ground_truth.size() != predictions.size())
    throw DimensionError("nlq_recall: one prediction list per query required");
  if (ground_truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < ground_truth.size(); ++q) {
    const auto& list = predictions[q];
    const std::size_t upto = std::min(top_k, list.size());
    for (std::size_t r = 0; r < upto; ++r)
      if (temporal_iou(list[r], ground_truth[q]) >= iou_threshold) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(ground_truth.size());
}

}  // namespace mset
