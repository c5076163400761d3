#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "mset/datagen.hpp"
#include "mset/error.hpp"
#include "mset/feature_store.hpp"

using namespace mset;
namespace fs = std::filesystem;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

fs::path scratch_dir(const char* name) {
  auto dir = fs::temp_directory_path() / ("mset_test_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("vocabulary") {
  const auto v = ConceptVocabulary::random(16, 64, 3);
  CHECK(v.size() == 16);
  CHECK(v.dim() == 64);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(std::sqrt(dot(v.vector(i), v.vector(i))) - 1.0) < 1e-6);
    for (double x : v.vector(i)) CHECK(static_cast<double>(static_cast<float>(x)) == x);
    for (std::size_t j = i + 1; j < 16; ++j) CHECK(std::abs(dot(v.vector(i), v.vector(j))) < 0.5);
  }
  CHECK(num::bit_equal(v.vectors(), ConceptVocabulary::random(16, 64, 3).vectors()));
  CHECK_FALSE(num::bit_equal(v.vectors(), ConceptVocabulary::random(16, 64, 4).vectors()));
}

TEST_CASE("generated video invariants") {
  const auto vocab = ConceptVocabulary::random(16, 64, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    VideoSpec spec;
    spec.seed = seed;
    spec.moments = 1 + seed % 6;
    const auto rec = generate_video(vocab, spec, "v");
    CHECK(rec.frames() == 600);
    REQUIRE(rec.narrations.size() == spec.moments);
    for (std::size_t j = 0; j < rec.narrations.size(); ++j) {
      const auto& n = rec.narrations[j];
      CHECK(0.0 <= n.a);
      CHECK(n.a <= n.t);
      CHECK(n.t <= n.b);
      CHECK(n.b <= rec.duration);
      if (j > 0) CHECK(rec.narrations[j - 1].t < n.t);
      if (j > 0) CHECK(rec.narrations[j - 1].b <= n.a);
    }
    for (std::size_t f = 0; f < rec.frames(); ++f)
      CHECK(std::abs(std::sqrt(dot(rec.features.row_span(f), rec.features.row_span(f))) - 1.0) < 1e-6);
  }
}

TEST_CASE("planted moments") {
  const auto vocab = ConceptVocabulary::random(16, 64, 2);
  VideoSpec spec;
  spec.noise_level = 0.0;
  spec.seed = 9;
  const auto rec = generate_video(vocab, spec, "v");
  std::size_t in_moment = 0, background = 0;
  double max_bg = 0.0;
  for (std::size_t f = 0; f < rec.frames(); ++f) {
    const double centre = (static_cast<double>(f) + 0.5) / rec.fps;
    const Narration* owner = nullptr;
    for (const auto& n : rec.narrations)
      if (centre >= n.a && centre <= n.b) owner = &n;
    const auto x = rec.features.row_span(f);
    if (owner) {
      ++in_moment;
      CHECK(dot(x, vocab.vector(owner->concept_id)) == doctest::Approx(1.0).epsilon(1e-6));
      // Nearest-concept classification is exact without noise.
      std::size_t best = 0;
      for (std::size_t k = 1; k < vocab.size(); ++k)
        if (dot(x, vocab.vector(k)) > dot(x, vocab.vector(best))) best = k;
      CHECK(best == owner->concept_id);
    } else {
      ++background;
      for (std::size_t k = 0; k < vocab.size(); ++k) max_bg = std::max(max_bg, std::abs(dot(x, vocab.vector(k))));
    }
  }
  CHECK(in_moment > 0);
  CHECK(background > 0);
  CHECK(max_bg < 3.0 / std::sqrt(64.0) * 2.0);
}

TEST_CASE("background frames are nearly orthogonal to concepts on average") {
  const auto vocab = ConceptVocabulary::random(16, 64, 5);
  VideoSpec spec;
  spec.moments = 1;
  spec.min_fill = spec.max_fill = 0.05;
  spec.duration = 400.0;
  spec.fps = 6.0;
  spec.seed = 4;
  const auto rec = generate_video(vocab, spec, "bg");
  double total = 0.0;
  std::size_t count = 0;
  const auto& n = rec.narrations[0];
  for (std::size_t f = 0; f < rec.frames() && count < 1000; ++f) {
    const double centre = (static_cast<double>(f) + 0.5) / rec.fps;
    if (centre >= n.a && centre <= n.b) continue;
    total += std::abs(dot(rec.features.row_span(f), vocab.vector(0)));
    ++count;
  }
  CHECK(count == 1000);
  CHECK(total / 1000.0 < 3.0 / std::sqrt(64.0));
}

TEST_CASE("same seed twice gives identical records") {
  const auto vocab = ConceptVocabulary::random(16, 64, 1);
  VideoSpec spec;
  spec.seed = 77;
  CHECK(records_equal(generate_video(vocab, spec, "a"), generate_video(vocab, spec, "a")));
  spec.concepts = {3, 3, 1, 0};
  const auto fixed = generate_video(vocab, spec, "a");
  CHECK(fixed.narrations[0].concept_id == 3);
  CHECK(fixed.narrations[1].concept_id == 3);
}

TEST_CASE("interval sampling") {
  std::mt19937_64 rng(1);
  const std::vector<Narration> three = {{0, 2, 1, 3}, {1, 5, 4, 6}, {2, 9, 8, 10}};
  for (int i = 0; i < 2000; ++i) {
    const auto s = sample_interval(three, 1, 12.0, rng);
    CHECK(s.concept_id == 1);
    CHECK(s.start >= 2.0);
    CHECK(s.start <= 5.0);
    CHECK(s.end >= 5.0);
    CHECK(s.end <= 9.0);
  }
  const std::vector<Narration> single = {{4, 5, 4, 6}};
  for (int i = 0; i < 2000; ++i) {
    const auto s = sample_interval(single, 0, 10.0, rng);
    CHECK(s.start >= 0.0);
    CHECK(s.start <= 5.0);
    CHECK(s.end >= 5.0);
    CHECK(s.end <= 10.0);
  }
  double total = 0.0, lo = 1e9, hi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const double s = sample_interval(three, 1, 12.0, rng).start;
    total += s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(std::abs(total / 10000.0 - 3.5) < 0.05);
  CHECK(lo - 2.0 < 0.03);
  CHECK(5.0 - hi < 0.03);
  const auto all = sample_intervals(three, 12.0, rng);
  CHECK(all.size() == 3);
}

TEST_CASE("chunking") {
  const auto vocab = ConceptVocabulary::random(8, 64, 1);
  VideoSpec spec;
  spec.seed = 3;
  const auto rec = generate_video(vocab, spec, "vid");

  const auto whole = chunk_video(rec, 600.0);
  REQUIRE(whole.size() == 1);
  CHECK(records_equal(whole[0], rec));

  const auto chunks = chunk_video(rec, 40.0);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].frames() == 240);
  CHECK(chunks[1].frames() == 240);
  CHECK(chunks[2].frames() == 120);
  CHECK(chunks[2].duration == 20.0);
  CHECK(chunks[1].video_id == "vid_c1");

  std::size_t assigned = 0;
  for (std::size_t c = 0; c < chunks.size(); ++c)
    for (const auto& n : chunks[c].narrations) {
      ++assigned;
      CHECK(n.t >= 0.0);
      CHECK(n.t <= chunks[c].duration);
      CHECK(n.a >= 0.0);
      CHECK(n.b <= chunks[c].duration);
    }
  CHECK(assigned == rec.narrations.size());

  const auto back = concat_chunks(chunks, "vid");
  CHECK(num::bit_equal(back.features, rec.features));

  VideoRecord manual = rec;
  manual.narrations = {{2, 50.0, 45.0, 55.0}};
  const auto mc = chunk_video(manual, 40.0);
  REQUIRE(mc[1].narrations.size() == 1);
  CHECK(mc[1].narrations[0].t == 10.0);
  CHECK(mc[1].narrations[0].a == 5.0);
  CHECK(mc[1].narrations[0].b == 15.0);
}

TEST_CASE("feature store round trip and size") {
  const auto dir = scratch_dir("store");
  const auto vocab = ConceptVocabulary::random(8, 64, 1);
  VideoSpec spec;
  spec.seed = 11;
  const auto rec = generate_video(vocab, spec, "vid");
  const auto path = dir / "vid.bin";
  store_record(rec, path);
  CHECK(fs::file_size(path) == feature_file_size(600, 64, 4));
  CHECK(fs::file_size(path) == 16 + 600 * 64 * 4 + 4 + 4 * 28);
  CHECK(records_equal(load_record(path, "vid", rec.duration, rec.fps), rec));

  store_vocabulary(vocab, dir / "vocab.bin");
  CHECK(num::bit_equal(load_vocabulary(dir / "vocab.bin").vectors(), vocab.vectors()));

  auto expect_kind = [&](const fs::path& p, LoadError::Kind kind) {
    try {
      load_record(p, "x", rec.duration, rec.fps);
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(e.kind() == kind);
    }
  };
  auto corrupt = [&](const char* name, auto edit) {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    edit(bytes);
    const auto out_path = dir / name;
    std::ofstream(out_path, std::ios::binary) << bytes;
    return out_path;
  };
  expect_kind(corrupt("magic.bin", [](std::string& b) { b[0] = 'X'; }), LoadError::Kind::BadMagic);
  expect_kind(corrupt("version.bin", [](std::string& b) { b[4] = 9; }), LoadError::Kind::VersionMismatch);
  expect_kind(corrupt("short.bin", [](std::string& b) { b.resize(b.size() - 5); }), LoadError::Kind::Truncated);
  expect_kind(corrupt("long.bin", [](std::string& b) { b += "xx"; }), LoadError::Kind::Malformed);
  CHECK_THROWS_AS(load_record(dir / "missing.bin", "x", 1, 1), Error);
  fs::remove_all(dir);
}
