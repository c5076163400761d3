#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mset/numerics/tensor.hpp"

namespace mset {

// K fixed unit vectors in R^C standing in for frozen text-encoder outputs.
class ConceptVocabulary {
 public:
  ConceptVocabulary() = default;
  explicit ConceptVocabulary(num::Tensor vectors);

  // Gaussian directions, resampled until every pair has |cosine| < 0.5.
  // Entries are rounded to binary32 so the vocabulary survives storage.
  static ConceptVocabulary random(std::size_t count, std::size_t dim, std::uint64_t seed);

  std::size_t size() const { return vectors_.shape()[0]; }
  std::size_t dim() const { return vectors_.shape()[1]; }
  std::span<const double> vector(std::size_t id) const { return vectors_.row_span(id); }
  const num::Tensor& vectors() const { return vectors_; }

 private:
  num::Tensor vectors_;
};

struct Narration {
  std::uint32_t concept_id = 0;
  double t = 0.0;  // narration timestamp (seconds)
  double a = 0.0;  // true interval start
  double b = 0.0;  // true interval end

  bool operator==(const Narration&) const = default;
};

struct VideoRecord {
  std::string video_id;
  double duration = 0.0;
  double fps = 0.0;
  num::Tensor features;  // frames × C, unit rows, binary32-representable
  std::vector<Narration> narrations;

  std::size_t frames() const { return features.defined() ? features.shape()[0] : 0; }
};

bool records_equal(const VideoRecord& a, const VideoRecord& b);

struct MomentSample {
  std::uint32_t concept_id = 0;
  double start = 0.0;
  double end = 0.0;
};

struct VideoSpec {
  std::size_t moments = 4;
  double duration = 100.0;
  double fps = 6.0;
  double noise_level = 0.1;
  std::uint64_t seed = 0;
  // Fraction of each moment's slot covered by its true interval.
  double min_fill = 0.5;
  double max_fill = 0.9;
  // Explicit concept ids, one per moment; drawn from the vocabulary if empty.
  std::vector<std::uint32_t> concepts;
};

std::size_t frame_count(double duration, double fps);

// Plants `moments` non-overlapping intervals, one per equal slot of the
// video. In-moment frames are normalize(concept + noise·N(0, I)); background
// frames are normalize(N(0, I)). Narration timestamps are interval midpoints.
VideoRecord generate_video(const ConceptVocabulary& vocab, const VideoSpec& spec, std::string video_id);

// s ~ U(t_{j-1}, t_j), e ~ U(t_j, t_{j+1}) with t_0 = 0 and t_{M+1} = duration.
MomentSample sample_interval(std::span<const Narration> narrations, std::size_t j, double duration,
                             std::mt19937_64& rng);

std::vector<MomentSample> sample_intervals(std::span<const Narration> narrations, double duration,
                                           std::mt19937_64& rng);

// Consecutive chunks of chunk_seconds (last one possibly shorter). Each
// narration goes to the chunk containing its timestamp, re-based to the chunk
// start; its true interval is clipped to the chunk.
std::vector<VideoRecord> chunk_video(const VideoRecord& record, double chunk_seconds);

// Inverse of chunk_video for evaluation on whole videos.
VideoRecord concat_chunks(std::span<const VideoRecord> chunks, std::string video_id);

}  // namespace mset
