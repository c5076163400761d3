#pragma once

#include <cstddef>
#include <span>

#include "mset/numerics/tensor.hpp"

namespace mset {

// Learnable table of relative-time embeddings. Row 0 is the start of a
// video, the last row its end, whatever the video's length.
class TemporalTable {
 public:
  TemporalTable() = default;
  // Wraps an existing rows×width tensor (e.g. from a checkpoint).
  explicit TemporalTable(num::Tensor table);

  // row p, column 2i = sin(p / 10000^(2i/d)), column 2i+1 = cos(same).
  static TemporalTable sinusoidal(std::size_t rows, std::size_t width);

  std::size_t rows() const { return table_.shape()[0]; }
  std::size_t width() const { return table_.shape()[1]; }
  const num::Tensor& tensor() const { return table_; }
  num::Tensor& tensor() { return table_; }

 private:
  num::Tensor table_;
};

// Align-corners resampling to target_len rows; differentiable w.r.t. the table.
num::Tensor interpolate(const TemporalTable& table, std::size_t target_len);

// Embedding of time t within a video of the given duration, read at source
// coordinate (t / duration)·(T0 − 1). RangeError outside [0, duration].
num::Tensor embed_timestamp(const TemporalTable& table, double t, double duration);

// Row-wise timestamp embedding for several times at once (one lerp op).
num::Tensor embed_timestamps(const TemporalTable& table, std::span<const double> times, double duration);

// Index of the table row with maximal cosine to pred (ties → smaller index).
std::size_t nearest_row(std::span<const double> pred, const TemporalTable& table);

// Maps a predicted embedding back to seconds via nearest_row.
double decode_timestamp(std::span<const double> pred, const TemporalTable& table, double duration);

// Grid time of row i; decode_timestamp returns exactly these values.
double grid_timestamp(std::size_t row, std::size_t rows, double duration);

}  // namespace mset
