#include "mset/temporal_embedding.hpp"

#include <cmath>
#include <vector>

#include "mset/error.hpp"
#include "mset/numerics/ops.hpp"

namespace mset {

TemporalTable::TemporalTable(num::Tensor table) : table_(std::move(table)) {
  if (table_.rank() != 2 || table_.shape()[0] < 2)
    throw ConfigError("temporal table needs at least 2 rows, got " + num::shape_string(table_.shape()));
}

TemporalTable TemporalTable::sinusoidal(std::size_t rows, std::size_t width) {
  if (rows < 2) throw ConfigError("temporal table needs T0 >= 2, got " + std::to_string(rows));
  if (width == 0 || width % 2 != 0)
    throw ConfigError("sinusoidal init needs an even embedding width, got " + std::to_string(width));
  std::vector<double> data(rows * width);
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(width));
      const double angle = static_cast<double>(p) / freq;
      data[p * width + 2 * i] = std::sin(angle);
      data[p * width + 2 * i + 1] = std::cos(angle);
    }
  }
  return TemporalTable(num::Tensor({rows, width}, std::move(data), true));
}

num::Tensor interpolate(const TemporalTable& table, std::size_t target_len) {
  if (target_len == 0) throw RangeError("interpolate: target length must be >= 1");
  const double last = static_cast<double>(table.rows() - 1);
  std::vector<double> coords(target_len);
  if (target_len == 1) {
    coords[0] = last / 2.0;
  } else {
    for (std::size_t k = 0; k < target_len; ++k)
      coords[k] = static_cast<double>(k) * last / static_cast<double>(target_len - 1);
  }
  return num::lerp_rows(table.tensor(), coords);
}

num::Tensor embed_timestamps(const TemporalTable& table, std::span<const double> times, double duration) {
  if (!(duration > 0.0)) throw RangeError("embed_timestamp: duration must be positive");
  const double last = static_cast<double>(table.rows() - 1);
  std::vector<double> coords(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t >= 0.0 && t <= duration))
      throw RangeError("embed_timestamp: t=" + std::to_string(t) + " outside [0, " +
                       std::to_string(duration) + "]");
    coords[i] = std::min(last, t * last / duration);
  }
  return num::lerp_rows(table.tensor(), coords);
}

num::Tensor embed_timestamp(const TemporalTable& table, double t, double duration) {
  const double times[1] = {t};
  return embed_timestamps(table, times, duration);
}

std::size_t nearest_row(std::span<const double> pred, const TemporalTable& table) {
  const std::size_t d = table.width();
  if (pred.size() != d)
    throw DimensionError("decode_timestamp: prediction width " + std::to_string(pred.size()) +
                         " != table width " + std::to_string(d));
  double pn = 0.0;
  for (double v : pred) pn += v * v;
  pn = std::sqrt(pn);
  if (!(pn >= 1e-12)) throw DegenerateVectorError("decode_timestamp: zero-norm prediction");

  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto row = table.tensor().row_span(i);
    double dot = 0.0, rn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += pred[j] * row[j];
      rn += row[j] * row[j];
    }
    rn = std::sqrt(rn);
    const double cos = rn > 0.0 ? dot / (pn * rn) : 0.0;
    if (cos > best_cos) {
      best_cos = cos;
      best = i;
    }
  }
  return best;
}

double grid_timestamp(std::size_t row, std::size_t rows, double duration) {
  return static_cast<double>(row) * duration / static_cast<double>(rows - 1);
}

double decode_timestamp(std::span<const double> pred, const TemporalTable& table, double duration) {
  if (!(duration > 0.0)) throw RangeError("decode_timestamp: duration must be positive");
  return grid_timestamp(nearest_row(pred, table), table.rows(), duration);
}

}  // namespace mset
