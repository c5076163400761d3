#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mset/numerics/tensor.hpp"
#include "mset/temporal_embedding.hpp"

namespace mset {

struct ModelConfig {
  std::size_t feature_dim = 64;  // C
  std::size_t model_dim = 64;    // d
  std::size_t conv_kernel = 7;   // kernel == stride
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t num_queries = 16;  // N
  std::size_t te_rows = 64;      // T0
  std::size_t ffn_hidden = 256;

  // d=512, 8×64 heads, 6+6 layers, kernel 7 (C follows the feature extractor).
  static ModelConfig full_scale(std::size_t feature_dim);

  void validate() const;  // ConfigError with a message per violated rule
  std::size_t parameter_count() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Linear {
  num::Tensor weight;  // in × out
  num::Tensor bias;    // out
};

struct LayerNorm {
  num::Tensor gain;
  num::Tensor bias;
};

struct Attention {
  Linear query, key, value, output;
};

struct FeedForward {
  Linear in, out;
};

struct EncoderLayer {
  LayerNorm norm1;
  Attention self_attn;
  LayerNorm norm2;
  FeedForward ffn;
};

struct DecoderLayer {
  LayerNorm norm1;
  Attention self_attn;
  LayerNorm norm2;
  Attention cross_attn;
  LayerNorm norm3;
  FeedForward ffn;
};

// Sigmoid-loss logit scale and offset: logit = exp(log_temperature)·s + bias.
struct LossScales {
  num::Tensor log_temperature;
  num::Tensor bias;

  double temperature() const;
};

struct NamedTensor {
  std::string name;
  num::Tensor tensor;
};

struct ModelParams {
  ModelConfig config;
  Linear conv;
  TemporalTable temporal;
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  num::Tensor queries;  // N × d
  FeedForward visual_head;    // d → d → C
  FeedForward temporal_head;  // d → d → 2d
  LossScales scales;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  // Every learnable tensor under a stable dotted name, in a fixed order.
  // Handles share storage with the model.
  std::vector<NamedTensor> named() const;
  std::vector<num::Tensor> tensors() const;
  ModelParams clone() const;
};

struct MomentPrediction {
  num::Tensor visual;    // N × C, unit rows
  num::Tensor te_start;  // N × d, unit rows
  num::Tensor te_end;    // N × d, unit rows
};

// ⌊T/k⌋ tokens from non-overlapping k-frame windows; remainder frames dropped.
num::Tensor tokenize(const num::Tensor& features, const ModelParams& params);

num::Tensor multi_head_attention(const Attention& attn, const num::Tensor& queries, const num::Tensor& memory,
                                 std::size_t heads, std::size_t head_dim);
num::Tensor feed_forward(const FeedForward& ffn, const num::Tensor& x);

// tokens + interpolated temporal embeddings, then the pre-norm encoder stack.
num::Tensor encode(const num::Tensor& tokens, const ModelParams& params);
// Learnable queries attending to the encoded memory.
num::Tensor decode(const num::Tensor& memory, const ModelParams& params);
MomentPrediction project(const num::Tensor& decoded, const ModelParams& params);

MomentPrediction forward(const num::Tensor& features, const ModelParams& params);

}  // namespace mset
