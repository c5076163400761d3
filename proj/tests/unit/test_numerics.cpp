#include <doctest.h>

#include <cmath>
#include <random>

#include "mset/error.hpp"
#include "mset/numerics/adam.hpp"
#include "mset/numerics/ops.hpp"
#include "mset/numerics/tape.hpp"
#include "support/test_support.hpp"

using namespace mset;
using namespace mset::num;
using mset::testing::max_gradient_error;
using mset::testing::random_tensor;

TEST_CASE("matmul identity and dot product") {
  const auto id = Tensor::matrix({{1, 0}, {0, 1}});
  const auto b = Tensor::matrix({{3, 4}, {5, 6}});
  CHECK(bit_equal(matmul(id, b), b));
  CHECK(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})).item() == 11.0);
}

TEST_CASE("matmul matches a brute-force triple loop") {
  std::mt19937_64 rng(3);
  const auto a = random_tensor({3, 4}, rng, -1, 1, false);
  const auto b = random_tensor({4, 2}, rng, -1, 1, false);
  const auto c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double ref = 0.0;
      for (std::size_t k = 0; k < 4; ++k) ref += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(ref).epsilon(1e-15));
    }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  const auto a = Tensor::zeros({2, 3});
  const auto b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("x [2x3]") != std::string::npos);
  }
}

TEST_CASE("elementwise ops") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  const auto s = add(Tensor::row(std::vector<double>{1, 2}), Tensor::row(std::vector<double>{3, 4}));
  CHECK(s.data()[0] == 4.0);
  CHECK(s.data()[1] == 6.0);
  for (double x : {-40.0, -5.0, 3.0, 25.0, 700.0}) {
    const double got = sigmoid(Tensor::scalar(x)).item();
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK(got == doctest::Approx(1.0 / (1.0 + std::exp(-x))).epsilon(1e-14));
  }
  CHECK(sigmoid(Tensor::scalar(30.0)).item() < 1.0);
  CHECK_THROWS_AS(log(Tensor::row(std::vector<double>{1.0, 0.0})), DomainError);
  CHECK_THROWS_AS(log(Tensor::scalar(-2.0)), DomainError);
  CHECK(log_sigmoid(Tensor::scalar(-800.0)).item() == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_sigmoid(Tensor::scalar(800.0)).item()));
  CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
}

TEST_CASE("l2_normalize_rows") {
  const auto y = l2_normalize_rows(Tensor::matrix({{3, 4}}));
  CHECK(y.data()[0] == doctest::Approx(0.6));
  CHECK(y.data()[1] == doctest::Approx(0.8));
  const auto unit = Tensor::matrix({{0, 1, 0}});
  CHECK(bit_equal(l2_normalize_rows(unit), unit));
  std::mt19937_64 rng(5);
  const auto r = l2_normalize_rows(random_tensor({6, 17}, rng, -3, 3, false));
  for (std::size_t i = 0; i < 6; ++i) {
    double ss = 0.0;
    for (double v : r.row_span(i)) ss += v * v;
    CHECK(std::abs(std::sqrt(ss) - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(l2_normalize_rows(Tensor::matrix({{1, 1}, {0, 0}})), DegenerateVectorError);
}

TEST_CASE("softmax and layer norm") {
  const auto u = softmax_rows(Tensor::matrix({{0, 0}}));
  CHECK(u.data()[0] == 0.5);
  CHECK(u.data()[1] == 0.5);

  std::mt19937_64 rng(11);
  const auto x = random_tensor({4, 9}, rng, -2, 2, false);
  std::vector<double> shifted(x.data().begin(), x.data().end());
  for (auto& v : shifted) v += 123.25;
  const auto a = softmax_rows(x);
  const auto b = softmax_rows(Tensor(x.shape(), shifted));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (double v : a.row_span(r)) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }

  const auto ln = layer_norm_rows(random_tensor({5, 16}, rng, -4, 7, false), Tensor::full({16}, 1.0),
                                  Tensor::zeros({16}), 0.0);
  for (std::size_t r = 0; r < 5; ++r) {
    double mu = 0.0, var = 0.0;
    for (double v : ln.row_span(r)) mu += v;
    mu /= 16.0;
    for (double v : ln.row_span(r)) var += (v - mu) * (v - mu);
    CHECK(std::abs(mu) < 1e-9);
    CHECK(var / 16.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("backward on hand-computable losses") {
  SUBCASE("x*x at 3") {
    Tensor x = Tensor::scalar(3.0, true);
    Tape tape;
    Tensor loss;
    {
      TapeScope s(tape);
      loss = mul(x, x);
    }
    tape.backward(loss);
    CHECK(x.grad()[0] == 6.0);
    CHECK(tape.empty());
  }
  SUBCASE("sigmoid at 0") {
    Tensor x = Tensor::scalar(0.0, true);
    Tape tape;
    Tensor loss;
    {
      TapeScope s(tape);
      loss = sigmoid(x);
    }
    tape.backward(loss);
    CHECK(x.grad()[0] == 0.25);
  }
  SUBCASE("errors") {
    Tensor x = Tensor::row(std::vector<double>{1, 2}, true);
    Tape tape;
    Tensor y;
    {
      TapeScope s(tape);
      y = scale(x, 2.0);
    }
    CHECK_THROWS_AS(tape.backward(y), RankError);
    Tape empty;
    CHECK_THROWS_AS(empty.backward(Tensor::scalar(1.0, true)), RankError);
  }
  SUBCASE("no tape, no tracking") {
    Tensor x = Tensor::scalar(2.0, true);
    CHECK_FALSE(mul(x, x).requires_grad());
  }
}

TEST_CASE("every differentiable op agrees with central differences") {
  std::mt19937_64 rng(17);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 5}, rng);
  auto c = random_tensor({3, 4}, rng);
  auto w = random_tensor({6, 4}, rng);
  auto pos = random_tensor({3, 4}, rng, 0.5, 2.0);
  auto bias = random_tensor({4}, rng);
  auto gain = random_tensor({4}, rng, 0.5, 1.5);
  auto s = random_tensor({1}, rng);
  // Fixed random projection turns any tensor into a non-trivial scalar.
  auto probe = [&rng](const Tensor& t) {
    static std::mt19937_64 prng(99);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> w(t.size());
    for (auto& v : w) v = u(prng);
    const Tensor weights(t.shape(), std::move(w));
    return [weights](const Tensor& x) { return sum(mul(x, weights)); };
  };
  (void)rng;
  const double tol = 1e-4;

  struct Case {
    const char* name;
    std::function<Tensor()> f;
    std::vector<Tensor> params;
  };
  auto p34 = probe(c);
  auto p35 = probe(Tensor::zeros({3, 5}));
  auto p36 = probe(Tensor::zeros({3, 6}));
  auto p43 = probe(Tensor::zeros({4, 3}));
  auto p32 = probe(Tensor::zeros({3, 2}));
  auto p38 = probe(Tensor::zeros({3, 8}));
  auto p24 = probe(Tensor::zeros({2, 4}));
  auto p26 = probe(Tensor::zeros({2, 6}));
  auto p1 = probe(Tensor::zeros({1}));
  const std::vector<double> coords = {0.0, 0.25, 1.5, 2.0};
  auto p45 = probe(Tensor::zeros({4, 5}));
  std::vector<Case> cases = {
      {"matmul", [&] { return p35(matmul(a, b)); }, {a, b}},
      {"matmul_nt", [&] { return p36(matmul_nt(a, w)); }, {a, w}},
      {"transpose", [&] { return p43(transpose(a)); }, {a}},
      {"add", [&] { return p34(add(a, c)); }, {a, c}},
      {"sub", [&] { return p34(sub(a, c)); }, {a, c}},
      {"mul", [&] { return p34(mul(a, c)); }, {a, c}},
      {"mul scalar broadcast", [&] { return p34(mul(a, s)); }, {a, s}},
      {"add scalar broadcast", [&] { return p34(add(s, a)); }, {a, s}},
      {"scale/neg", [&] { return p34(neg(scale(a, 1.7))); }, {a}},
      {"sigmoid", [&] { return p34(sigmoid(a)); }, {a}},
      {"log", [&] { return p34(log(pos)); }, {pos}},
      {"exp", [&] { return p34(exp(a)); }, {a}},
      {"log_sigmoid", [&] { return p34(log_sigmoid(scale(a, 4.0))); }, {a}},
      {"gelu", [&] { return p34(gelu(scale(a, 2.0))); }, {a}},
      {"add_row", [&] { return p34(add_row(a, bias)); }, {a, bias}},
      {"softmax_rows", [&] { return p34(softmax_rows(a)); }, {a}},
      {"layer_norm_rows", [&] { return p34(layer_norm_rows(a, gain, bias)); }, {a, gain, bias}},
      {"l2_normalize_rows", [&] { return p34(l2_normalize_rows(a)); }, {a}},
      {"slice_cols", [&] { return p32(slice_cols(a, 1, 2)); }, {a}},
      {"slice_rows", [&] { return p24(slice_rows(a, 1, 2)); }, {a}},
      {"concat_cols", [&] { return p38(concat_cols({a, c})); }, {a, c}},
      {"reshape", [&] { return p26(reshape(slice_rows(a, 0, 3), {2, 6})); }, {a}},
      {"lerp_rows", [&] { return p45(lerp_rows(slice_rows(b, 0, 3), coords)); }, {b}},
      {"sum/mean", [&] { return p1(add(sum(a), mean(c))); }, {a, c}},
  };
  for (auto& cs : cases) {
    INFO(std::string(cs.name));
    CHECK(max_gradient_error(cs.f, cs.params) < tol);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<Tensor> p = {Tensor::matrix({{1.5, -2.0}}, true)};
    AdamState st(AdamOptions{0.1}, p);
    std::vector<double> zeros(2, 0.0);
    Tape tape;
    Tensor loss;
    {
      TapeScope s(tape);
      loss = sum(mul(p[0], Tensor({1, 2}, zeros)));
    }
    tape.backward(loss);
    adam_step(p, st);
    CHECK(p[0].data()[0] == 1.5);
    CHECK(p[0].data()[1] == -2.0);
  }
  SUBCASE("one bias-corrected step with g=1") {
    std::vector<Tensor> p = {Tensor::scalar(0.0, true)};
    AdamState st(AdamOptions{0.1}, p);
    Tape tape;
    Tensor loss;
    {
      TapeScope s(tape);
      loss = mul(p[0], Tensor::scalar(1.0));
    }
    tape.backward(loss);
    adam_step(p, st);
    // Reference recurrence evaluated independently: -0.1 / (1 + 1e-8).
    CHECK(p[0].item() == doctest::Approx(-0.09999999900000002).epsilon(1e-15));
    CHECK(st.step == 1);
  }
  SUBCASE("100 steps on x^2 from 1") {
    std::vector<Tensor> p = {Tensor::scalar(1.0, true)};
    AdamState st(AdamOptions{0.1}, p);
    for (int i = 0; i < 100; ++i) {
      p[0].zero_grad();
      Tape tape;
      Tensor loss;
      {
        TapeScope s(tape);
        loss = mul(p[0], p[0]);
      }
      tape.backward(loss);
      adam_step(p, st);
    }
    CHECK(std::abs(p[0].item()) < 0.05);
    // Scripted reference run of the same recurrence.
    CHECK(p[0].item() == doctest::Approx(0.002936675681102549).epsilon(1e-9));
  }
  SUBCASE("non-finite gradient halts without modifying parameters") {
    std::vector<Tensor> p = {Tensor::scalar(0.5, true)};
    AdamState st(AdamOptions{0.1}, p);
    Tape tape;
    Tensor loss;
    {
      TapeScope s(tape);
      loss = mul(p[0], Tensor::scalar(std::nan("")));
    }
    tape.backward(loss);
    CHECK_THROWS_AS(adam_step(p, st), NumericError);
    CHECK(p[0].item() == 0.5);
    CHECK(st.step == 0);
  }
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({0, 2}, {}), DimensionError);
  std::mt19937_64 rng(1);
  auto a = random_tensor({3, 3}, rng);
  Tape tape;
  Tensor loss;
  {
    TapeScope s(tape);
    loss = sum(mul(a, a));
  }
  tape.backward(loss);
  CHECK(a.grad().size() == a.size());
}
