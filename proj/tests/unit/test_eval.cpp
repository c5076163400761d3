#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mset/error.hpp"
#include "mset/eval.hpp"
#include "mset/numerics/ops.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace mset;
using num::Tensor;
using testing::random_tensor;

namespace {

Tensor unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return num::l2_normalize_rows(random_tensor({rows, cols}, rng, -1, 1, false));
}

MomentPrediction random_prediction(std::size_t n, std::size_t c, std::size_t d, std::mt19937_64& rng) {
  return {unit_rows(n, c, rng), unit_rows(n, d, rng), unit_rows(n, d, rng)};
}

std::vector<char> random_labels(std::size_t n, std::mt19937_64& rng, double p = 0.4) {
  std::bernoulli_distribution b(p);
  std::vector<char> out(n);
  for (auto& v : out) v = b(rng) ? 1 : 0;
  return out;
}

}  // namespace

TEST_CASE("recognition scores") {
  std::mt19937_64 rng(1);
  const auto cls = unit_rows(3, 5, rng);
  std::vector<double> rep;
  for (int i = 0; i < 4; ++i) rep.insert(rep.end(), cls.row_span(1).begin(), cls.row_span(1).end());
  MomentPrediction same{Tensor({4, 5}, rep), unit_rows(4, 2, rng), unit_rows(4, 2, rng)};
  CHECK(recognition_scores(same, cls)[1] == doctest::Approx(1.0).epsilon(1e-15));

  const MomentPrediction axis{Tensor::matrix({{1, 0}, {1, 0}}), unit_rows(2, 2, rng), unit_rows(2, 2, rng)};
  CHECK(recognition_scores(axis, Tensor::matrix({{0, 1}}))[0] == 0.0);

  const auto pred = random_prediction(7, 5, 3, rng);
  const auto s = recognition_scores(pred, cls);
  for (std::size_t k = 0; k < 3; ++k) {
    double ref = 0;
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t c = 0; c < 5; ++c) ref += pred.visual.at(i, c) * cls.at(k, c);
    CHECK(s[k] == doctest::Approx(ref / 7.0).epsilon(1e-14));
  }

  // Linearity: score of normalized (u+v) from the scores of u and v.
  const auto u = cls.row_span(0), v = cls.row_span(2);
  std::vector<double> w(5);
  for (std::size_t c = 0; c < 5; ++c) w[c] = u[c] + v[c];
  double norm = 0;
  for (double x : w) norm += x * x;
  norm = std::sqrt(norm);
  const auto combined = recognition_scores(pred, num::l2_normalize_rows(Tensor({1, 5}, w)));
  CHECK(combined[0] == doctest::Approx((s[0] + s[2]) / norm).epsilon(1e-12));
}

TEST_CASE("average precision") {
  CHECK(average_precision(std::vector<double>{0.9, 0.1}, std::vector<char>{1, 0}) == 1.0);
  CHECK(average_precision(std::vector<double>{0.9, 0.1}, std::vector<char>{0, 1}) == 0.5);
  // Ties keep original order.
  CHECK(average_precision(std::vector<double>{0.5, 0.5}, std::vector<char>{0, 1}) == 0.5);
  CHECK(std::isnan(average_precision(std::vector<double>{0.5, 0.2}, std::vector<char>{0, 0})));
}

TEST_CASE("video_map matches the rank-walk oracle exactly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t videos = 2 + rng() % 9, classes = 1 + rng() % 6;
    std::vector<double> scores(videos * classes);
    for (auto& x : scores) x = trial % 3 == 0 ? std::round(u(rng) * 2) / 2 : u(rng);  // some ties
    auto labels = random_labels(videos * classes, rng);
    const auto r = video_map(scores, labels, videos, classes);
    const double ref = testing::reference_map(scores, labels, videos, classes);
    if (std::isnan(ref)) {
      CHECK(r.evaluated_classes == 0);
      continue;
    }
    CHECK(r.map == ref);
    std::size_t missing = 0;
    for (double ap : r.per_class_ap) missing += std::isnan(ap) ? 1 : 0;
    CHECK(r.warnings.size() == missing);
    CHECK(r.evaluated_classes == classes - missing);
  }
  const std::vector<double> five = {0.1, 0.8, 0.3, 0.5, 0.9, 0.2, 0.4, 0.6, 0.7, 0.05, 0.35, 0.15, 0.95, 0.45, 0.55};
  const std::vector<char> lab = {1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1};
  CHECK(video_map(five, lab, 5, 3).map == testing::reference_map(five, lab, 5, 3));
}

TEST_CASE("mAP depends on ranks only") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> scores(8 * 4);
    for (auto& x : scores) x = u(rng);
    const auto labels = random_labels(32, rng, 0.5);
    auto warped = scores;
    for (auto& x : warped) x = std::exp(3.0 * x) - 7.0;
    const auto a = video_map(scores, labels, 8, 4), b = video_map(warped, labels, 8, 4);
    if (a.evaluated_classes) CHECK(a.map == b.map);
  }
}

TEST_CASE("temporal IoU") {
  CHECK(temporal_iou({1, 3}, {1, 3}) == 1.0);
  CHECK(temporal_iou({0, 1}, {2, 3}) == 0.0);
  CHECK(temporal_iou({0, 4}, {2, 6}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(temporal_iou({2, 2}, {2, 2}) == 0.0);
  CHECK(temporal_iou({0, 10}, {2, 4}) == doctest::Approx(0.2));
}

TEST_CASE("nlq_recall") {
  const std::vector<Interval> gts = {{0, 10}, {20, 30}};
  const std::vector<std::vector<Interval>> exact = {{{0, 10}}, {{20, 30}}};
  for (double thr : {0.1, 0.5, 1.0}) CHECK(nlq_recall(gts, exact, 1, thr) == 1.0);
  const std::vector<std::vector<Interval>> far = {{{50, 60}}, {{70, 80}}};
  CHECK(nlq_recall(gts, far, 1, 0.01) == 0.0);

  // Hand tally over 10 queries: top-1 IoUs and top-5 best IoUs below.
  std::vector<Interval> g;
  std::vector<std::vector<Interval>> lists;
  // q0: top1 exact. q1: top1 IoU 0.4. q2: top1 miss, rank3 exact. q3: all miss.
  // q4: top1 IoU 1/3. q5: rank5 IoU 0.6. q6: rank6 exact (beyond K=5).
  // q7: top1 IoU 0.25. q8: top1 IoU 0.5. q9: rank2 IoU 0.2.
  auto add = [&](Interval gt, std::vector<Interval> l) {
    g.push_back(gt);
    lists.push_back(std::move(l));
  };
  const Interval miss{90, 95};
  add({0, 10}, {{0, 10}, miss, miss, miss, miss});
  add({0, 10}, {{0, 4}, miss, miss, miss, miss});
  add({0, 10}, {miss, miss, {0, 10}, miss, miss});
  add({0, 10}, {miss, miss, miss, miss, miss});
  add({0, 4}, {{2, 6}, miss, miss, miss, miss});
  add({0, 10}, {miss, miss, miss, miss, {0, 6}});
  add({0, 10}, {miss, miss, miss, miss, miss, {0, 10}});
  add({0, 10}, {{5, 25}, miss, miss, miss, miss});
  add({0, 10}, {{0, 5}, miss, miss, miss, miss});
  add({0, 10}, {miss, {8, 18}, miss, miss, miss});
  // IoU ≥ 0.3 at top-1: q0, q1, q4, q8 → 0.4. At top-5 add q2, q5 → 0.6.
  // IoU ≥ 0.5 at top-1: q0, q8 → 0.2. At top-5 add q2, q5 → 0.4.
  CHECK(nlq_recall(g, lists, 1, 0.3) == doctest::Approx(0.4));
  CHECK(nlq_recall(g, lists, 5, 0.3) == doctest::Approx(0.6));
  CHECK(nlq_recall(g, lists, 1, 0.5) == doctest::Approx(0.2));
  CHECK(nlq_recall(g, lists, 5, 0.5) == doctest::Approx(0.4));
  CHECK(nlq_recall(g, lists, 6, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("nlq_recall matches the reference and is monotone") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t q = 1 + rng() % 10;
    std::vector<Interval> gts(q);
    std::vector<std::vector<Interval>> lists(q);
    auto interval = [&] {
      double a = u(rng), b = u(rng);
      return Interval{std::min(a, b), std::max(a, b)};
    };
    for (std::size_t i = 0; i < q; ++i) {
      gts[i] = interval();
      for (int k = 0; k < 6; ++k) lists[i].push_back(interval());
    }
    double prev_k = 0.0;
    for (std::size_t k : {1, 2, 5, 6}) {
      double prev_thr = 1.0;
      for (double thr : {0.1, 0.3, 0.5, 0.7}) {
        const double r = nlq_recall(gts, lists, k, thr);
        CHECK(r == testing::reference_recall(gts, lists, k, thr));
        CHECK(r <= prev_thr);
        prev_thr = r;
      }
      const double r03 = nlq_recall(gts, lists, k, 0.3);
      CHECK(r03 >= prev_k);
      prev_k = r03;
    }
  }
}

TEST_CASE("nlq_infer") {
  std::mt19937_64 rng(5);
  const auto table = TemporalTable::sinusoidal(16, 8);
  auto pred = random_prediction(6, 5, 8, rng);
  const auto query = unit_rows(1, 5, rng);

  const auto order = rank_queries(pred, query.data());
  std::vector<std::size_t> ref(6);
  std::iota(ref.begin(), ref.end(), 0);
  std::vector<double> sims(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 5; ++c) sims[i] += pred.visual.at(i, c) * query.at(0, c);
  std::stable_sort(ref.begin(), ref.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  CHECK(order == ref);

  const auto all = nlq_infer(pred, query.data(), table, 60.0, 6);
  CHECK(all.size() == 6);
  for (std::size_t r = 0; r < 6; ++r) {
    const std::size_t i = order[r];
    double s = decode_timestamp(pred.te_start.row_span(i), table, 60.0);
    double e = decode_timestamp(pred.te_end.row_span(i), table, 60.0);
    if (s > e) std::swap(s, e);
    CHECK(all[r].start == s);
    CHECK(all[r].end == e);
    CHECK(all[r].start <= all[r].end);
  }
  CHECK_THROWS_AS(nlq_infer(pred, query.data(), table, 60.0, 7), RangeError);

  // A query vector equal to some visual row ranks that row first.
  std::vector<double> visual(pred.visual.data().begin(), pred.visual.data().end());
  std::copy(query.data().begin(), query.data().end(), visual.begin() + 3 * 5);
  const MomentPrediction planted{Tensor({6, 5}, visual), pred.te_start, pred.te_end};
  CHECK(rank_queries(planted, query.data())[0] == 3);
}

TEST_CASE("random-ranking baseline oracle tracks label prevalence") {
  // Single class, 1 positive in 4: expected AP = mean over ranks of 1/r.
  const std::vector<char> labels = {1, 0, 0, 0};
  const auto b = testing::random_ranking_baseline(labels, 4, 1, 20000, 1);
  CHECK(b.mean == doctest::Approx((1.0 + 0.5 + 1.0 / 3 + 0.25) / 4).epsilon(0.01));
}
