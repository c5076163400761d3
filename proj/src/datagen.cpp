#include "mset/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "mset/error.hpp"

namespace mset {

namespace {

double to_binary32(double v) { return static_cast<double>(static_cast<float>(v)); }

void normalize_into(std::span<double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double n = std::sqrt(ss);
  for (double& x : v) x = to_binary32(x / n);
}

}  // namespace

ConceptVocabulary::ConceptVocabulary(num::Tensor vectors) : vectors_(std::move(vectors)) {
  if (vectors_.rank() != 2) throw DimensionError("vocabulary must be a K×C matrix");
}

ConceptVocabulary ConceptVocabulary::random(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count == 0 || dim == 0) throw ConfigError("vocabulary needs K >= 1 and C >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> data(count * dim);
  constexpr int kMaxAttempts = 10000;
  for (std::size_t k = 0; k < count; ++k) {
    std::span<double> row(data.data() + k * dim, dim);
    int attempts = 0;
    for (;;) {
      for (double& x : row) x = gauss(rng);
      normalize_into(row);
      bool ok = true;
      for (std::size_t q = 0; q < k && ok; ++q) {
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += row[j] * data[q * dim + j];
        ok = std::abs(dot) < 0.5;
      }
      if (ok) break;
      if (++attempts == kMaxAttempts)
        throw GenerationError("cannot draw " + std::to_string(count) + " well-separated concepts in R^" +
                              std::to_string(dim));
    }
  }
  return ConceptVocabulary(num::Tensor({count, dim}, std::move(data)));
}

bool records_equal(const VideoRecord& a, const VideoRecord& b) {
  return a.video_id == b.video_id && a.duration == b.duration && a.fps == b.fps &&
         a.narrations == b.narrations && a.features.defined() == b.features.defined() &&
         (!a.features.defined() || num::bit_equal(a.features, b.features));
}

std::size_t frame_count(double duration, double fps) {
  return static_cast<std::size_t>(std::llround(duration * fps));
}

VideoRecord generate_video(const ConceptVocabulary& vocab, const VideoSpec& spec, std::string video_id) {
  const std::size_t m = spec.moments;
  if (m == 0) throw GenerationError("generate_video: at least one moment required");
  if (!(spec.duration > 0.0) || !(spec.fps > 0.0))
    throw GenerationError("generate_video: duration and fps must be positive");
  const double slot = spec.duration / static_cast<double>(m);
  // Each moment must cover at least two frames of its slot.
  if (slot * spec.min_fill < 2.0 / spec.fps)
    throw GenerationError("generate_video: " + std::to_string(m) + " moments do not fit in " +
                          std::to_string(spec.duration) + " s at " + std::to_string(spec.fps) + " fps");
  if (!(spec.min_fill > 0.0 && spec.min_fill <= spec.max_fill && spec.max_fill <= 1.0))
    throw GenerationError("generate_video: fill fractions must satisfy 0 < min <= max <= 1");
  if (!spec.concepts.empty() && spec.concepts.size() != m)
    throw GenerationError("generate_video: explicit concept list must have one id per moment");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::uint32_t> concepts = spec.concepts;
  if (concepts.empty()) {
    std::vector<std::uint32_t> ids(vocab.size());
    std::iota(ids.begin(), ids.end(), 0u);
    if (m <= ids.size()) {
      for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
        std::swap(ids[i], ids[pick(rng)]);
      }
      concepts.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));
    } else {
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(vocab.size() - 1));
      for (std::size_t i = 0; i < m; ++i) concepts.push_back(pick(rng));
    }
  }
  for (auto c : concepts)
    if (c >= vocab.size()) throw GenerationError("generate_video: concept id out of vocabulary");

  VideoRecord rec;
  rec.video_id = std::move(video_id);
  rec.duration = spec.duration;
  rec.fps = spec.fps;
  for (std::size_t j = 0; j < m; ++j) {
    const double fill = spec.min_fill + (spec.max_fill - spec.min_fill) * unit(rng);
    const double len = fill * slot;
    const double a = static_cast<double>(j) * slot + (slot - len) * unit(rng);
    const double b = a + len;
    rec.narrations.push_back({concepts[j], 0.5 * (a + b), a, b});
  }

  const std::size_t frames = frame_count(spec.duration, spec.fps);
  const std::size_t dim = vocab.dim();
  std::vector<double> data(frames * dim);
  for (std::size_t f = 0; f < frames; ++f) {
    const double center = (static_cast<double>(f) + 0.5) / spec.fps;
    std::span<double> row(data.data() + f * dim, dim);
    const Narration* owner = nullptr;
    for (const auto& n : rec.narrations)
      if (center >= n.a && center <= n.b) owner = &n;
    if (owner) {
      const auto cv = vocab.vector(owner->concept_id);
      for (std::size_t j = 0; j < dim; ++j) row[j] = cv[j] + spec.noise_level * gauss(rng);
    } else {
      for (double& x : row) x = gauss(rng);
    }
    normalize_into(row);
  }
  rec.features = num::Tensor({frames, dim}, std::move(data));
  return rec;
}

MomentSample sample_interval(std::span<const Narration> narrations, std::size_t j, double duration,
                             std::mt19937_64& rng) {
  const double prev = j == 0 ? 0.0 : narrations[j - 1].t;
  const double next = j + 1 == narrations.size() ? duration : narrations[j + 1].t;
  const double t = narrations[j].t;
  auto draw = [&rng](double lo, double hi) {
    if (!(hi > lo)) return lo;
    std::uniform_real_distribution<double> u(lo, hi);
    return std::clamp(u(rng), lo, hi);
  };
  MomentSample s;
  s.concept_id = narrations[j].concept_id;
  s.start = draw(prev, t);
  s.end = draw(t, next);
  return s;
}

std::vector<MomentSample> sample_intervals(std::span<const Narration> narrations, double duration,
                                           std::mt19937_64& rng) {
  std::vector<MomentSample> out;
  out.reserve(narrations.size());
  for (std::size_t j = 0; j < narrations.size(); ++j)
    out.push_back(sample_interval(narrations, j, duration, rng));
  return out;
}

std::vector<VideoRecord> chunk_video(const VideoRecord& record, double chunk_seconds) {
  if (!(chunk_seconds > 0.0)) throw RangeError("chunk_video: chunk length must be positive");
  const std::size_t count =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(record.duration / chunk_seconds - 1e-9)));
  if (count == 1) return {record};

  const std::size_t dim = record.features.cols();
  const std::size_t total_frames = record.frames();
  std::vector<VideoRecord> chunks;
  for (std::size_t c = 0; c < count; ++c) {
    const double start = static_cast<double>(c) * chunk_seconds;
    const double end = c + 1 == count ? record.duration : start + chunk_seconds;
    const std::size_t f0 = std::min(total_frames, frame_count(start, record.fps));
    const std::size_t f1 = c + 1 == count ? total_frames : std::min(total_frames, frame_count(end, record.fps));

    VideoRecord chunk;
    chunk.video_id = record.video_id + "_c" + std::to_string(c);
    chunk.duration = end - start;
    chunk.fps = record.fps;
    const auto src = record.features.data();
    chunk.features = num::Tensor({f1 - f0, dim}, std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(f0 * dim),
                                                                     src.begin() + static_cast<std::ptrdiff_t>(f1 * dim)));
    for (const auto& n : record.narrations) {
      const bool inside = n.t >= start && (n.t < end || (c + 1 == count && n.t <= end));
      if (!inside) continue;
      Narration local = n;
      local.t = n.t - start;
      local.a = std::clamp(n.a - start, 0.0, chunk.duration);
      local.b = std::clamp(n.b - start, 0.0, chunk.duration);
      chunk.narrations.push_back(local);
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

VideoRecord concat_chunks(std::span<const VideoRecord> chunks, std::string video_id) {
  if (chunks.empty()) throw RangeError("concat_chunks: no chunks");
  VideoRecord out;
  out.video_id = std::move(video_id);
  out.fps = chunks.front().fps;
  const std::size_t dim = chunks.front().features.cols();
  std::vector<double> data;
  double offset = 0.0;
  for (const auto& c : chunks) {
    if (c.features.cols() != dim) throw DimensionError("concat_chunks: feature widths differ");
    data.insert(data.end(), c.features.data().begin(), c.features.data().end());
    for (auto n : c.narrations) {
      n.t += offset;
      n.a += offset;
      n.b += offset;
      out.narrations.push_back(n);
    }
    offset += c.duration;
  }
  out.duration = offset;
  const std::size_t frames = data.size() / dim;
  out.features = num::Tensor({frames, dim}, std::move(data));
  return out;
}

}  // namespace mset
