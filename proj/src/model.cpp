#include "mset/model.hpp"

#include <cmath>
#include <random>

#include "mset/error.hpp"
#include "mset/numerics/ops.hpp"

namespace mset {

using num::Tensor;

ModelConfig ModelConfig::full_scale(std::size_t feature_dim) {
  ModelConfig c;
  c.feature_dim = feature_dim;
  c.model_dim = 512;
  c.conv_kernel = 7;
  c.enc_layers = 6;
  c.dec_layers = 6;
  c.heads = 8;
  c.head_dim = 64;
  c.ffn_hidden = 2048;
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (feature_dim == 0) fail("feature_dim must be positive");
  if (model_dim == 0 || model_dim % 2 != 0) fail("model_dim must be even, got " + std::to_string(model_dim));
  if (heads == 0 || head_dim == 0 || heads * head_dim != model_dim)
    fail("heads*head_dim must equal model_dim (" + std::to_string(heads) + "*" + std::to_string(head_dim) +
         " != " + std::to_string(model_dim) + ")");
  if (conv_kernel == 0) fail("conv_kernel must be positive");
  if (num_queries == 0) fail("num_queries must be positive");
  if (te_rows < 2) fail("te_rows must be at least 2");
  if (ffn_hidden == 0) fail("ffn_hidden must be positive");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = model_dim, c = feature_dim, h = ffn_hidden;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ffn = d * h + h + h * d + d;
  const std::size_t norm = 2 * d;
  const std::size_t enc = 2 * norm + attn + ffn;
  const std::size_t dec = 3 * norm + 2 * attn + ffn;
  return conv_kernel * c * d + d + te_rows * d + enc_layers * enc + dec_layers * dec + num_queries * d +
         (d * d + d + d * c + c) + (d * d + d + d * 2 * d + 2 * d) + 2;
}

double LossScales::temperature() const { return std::exp(log_temperature.item()); }

namespace {

Tensor gaussian(num::Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, stddev);
  const auto n = num::shape_size(shape);
  std::vector<double> data(n);
  for (auto& v : data) v = g(rng);
  return Tensor(std::move(shape), std::move(data), true);
}

Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return {gaussian({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng), Tensor::zeros({out}, true)};
}

LayerNorm make_norm(std::size_t d) { return {Tensor::full({d}, 1.0, true), Tensor::zeros({d}, true)}; }

Attention make_attention(std::size_t d, std::mt19937_64& rng) {
  return {make_linear(d, d, rng), make_linear(d, d, rng), make_linear(d, d, rng), make_linear(d, d, rng)};
}

FeedForward make_ffn(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
  return {make_linear(in, hidden, rng), make_linear(hidden, out, rng)};
}

Tensor apply(const Linear& l, const Tensor& x) { return num::add_row(num::matmul(x, l.weight), l.bias); }

Tensor apply(const LayerNorm& n, const Tensor& x) { return num::layer_norm_rows(x, n.gain, n.bias); }

void push(std::vector<NamedTensor>& out, const std::string& name, const Linear& l) {
  out.push_back({name + ".weight", l.weight});
  out.push_back({name + ".bias", l.bias});
}
void push(std::vector<NamedTensor>& out, const std::string& name, const LayerNorm& n) {
  out.push_back({name + ".gain", n.gain});
  out.push_back({name + ".bias", n.bias});
}
void push(std::vector<NamedTensor>& out, const std::string& name, const Attention& a) {
  push(out, name + ".query", a.query);
  push(out, name + ".key", a.key);
  push(out, name + ".value", a.value);
  push(out, name + ".output", a.output);
}
void push(std::vector<NamedTensor>& out, const std::string& name, const FeedForward& f) {
  push(out, name + ".in", f.in);
  push(out, name + ".out", f.out);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config.model_dim;
  ModelParams p;
  p.config = config;
  p.conv = make_linear(config.conv_kernel * config.feature_dim, d, rng);
  p.temporal = TemporalTable::sinusoidal(config.te_rows, d);
  for (std::size_t i = 0; i < config.enc_layers; ++i)
    p.encoder.push_back({make_norm(d), make_attention(d, rng), make_norm(d), make_ffn(d, config.ffn_hidden, d, rng)});
  for (std::size_t i = 0; i < config.dec_layers; ++i)
    p.decoder.push_back({make_norm(d), make_attention(d, rng), make_norm(d), make_attention(d, rng), make_norm(d),
                         make_ffn(d, config.ffn_hidden, d, rng)});
  p.queries = gaussian({config.num_queries, d}, 1.0, rng);
  p.visual_head = make_ffn(d, d, config.feature_dim, rng);
  p.temporal_head = make_ffn(d, d, 2 * d, rng);
  p.scales.log_temperature = Tensor::scalar(std::log(10.0), true);
  p.scales.bias = Tensor::scalar(-10.0, true);
  return p;
}

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  push(out, "conv", conv);
  out.push_back({"temporal.table", temporal.tensor()});
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const auto base = "encoder." + std::to_string(i);
    push(out, base + ".norm1", encoder[i].norm1);
    push(out, base + ".self_attn", encoder[i].self_attn);
    push(out, base + ".norm2", encoder[i].norm2);
    push(out, base + ".ffn", encoder[i].ffn);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const auto base = "decoder." + std::to_string(i);
    push(out, base + ".norm1", decoder[i].norm1);
    push(out, base + ".self_attn", decoder[i].self_attn);
    push(out, base + ".norm2", decoder[i].norm2);
    push(out, base + ".cross_attn", decoder[i].cross_attn);
    push(out, base + ".norm3", decoder[i].norm3);
    push(out, base + ".ffn", decoder[i].ffn);
  }
  out.push_back({"queries", queries});
  push(out, "visual_head", visual_head);
  push(out, "temporal_head", temporal_head);
  out.push_back({"scales.log_temperature", scales.log_temperature});
  out.push_back({"scales.bias", scales.bias});
  return out;
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  for (auto& nt : named()) out.push_back(nt.tensor);
  return out;
}

ModelParams ModelParams::clone() const {
  // Same structure, fresh storage for every tensor.
  ModelParams copy = *this;
  auto deep = [](Tensor& t) { t = t.clone(); };
  auto deep_linear = [&](Linear& l) {
    deep(l.weight);
    deep(l.bias);
  };
  auto deep_norm = [&](LayerNorm& n) {
    deep(n.gain);
    deep(n.bias);
  };
  auto deep_attn = [&](Attention& a) {
    deep_linear(a.query);
    deep_linear(a.key);
    deep_linear(a.value);
    deep_linear(a.output);
  };
  auto deep_ffn = [&](FeedForward& f) {
    deep_linear(f.in);
    deep_linear(f.out);
  };
  deep_linear(copy.conv);
  deep(copy.temporal.tensor());
  for (auto& l : copy.encoder) {
    deep_norm(l.norm1);
    deep_attn(l.self_attn);
    deep_norm(l.norm2);
    deep_ffn(l.ffn);
  }
  for (auto& l : copy.decoder) {
    deep_norm(l.norm1);
    deep_attn(l.self_attn);
    deep_norm(l.norm2);
    deep_attn(l.cross_attn);
    deep_norm(l.norm3);
    deep_ffn(l.ffn);
  }
  deep(copy.queries);
  deep_ffn(copy.visual_head);
  deep_ffn(copy.temporal_head);
  deep(copy.scales.log_temperature);
  deep(copy.scales.bias);
  return copy;
}

Tensor tokenize(const Tensor& features, const ModelParams& params) {
  const std::size_t k = params.config.conv_kernel;
  const std::size_t c = params.config.feature_dim;
  if (features.rank() != 2 || features.cols() != c)
    throw DimensionError("tokenize: expected T×" + std::to_string(c) + " features, got " +
                         num::shape_string(features.shape()));
  const std::size_t frames = features.shape()[0];
  if (frames < k)
    throw RangeError("tokenize: input too short (" + std::to_string(frames) + " frames < kernel " +
                     std::to_string(k) + ")");
  const std::size_t tokens = frames / k;
  Tensor windows = num::reshape(num::slice_rows(features, 0, tokens * k), {tokens, k * c});
  return apply(params.conv, windows);
}

Tensor feed_forward(const FeedForward& ffn, const Tensor& x) {
  return apply(ffn.out, num::gelu(apply(ffn.in, x)));
}

Tensor multi_head_attention(const Attention& attn, const Tensor& queries, const Tensor& memory, std::size_t heads,
                            std::size_t head_dim) {
  const Tensor q = apply(attn.query, queries);
  const Tensor k = apply(attn.key, memory);
  const Tensor v = apply(attn.value, memory);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = num::slice_cols(q, h * head_dim, head_dim);
    const Tensor kh = num::slice_cols(k, h * head_dim, head_dim);
    const Tensor vh = num::slice_cols(v, h * head_dim, head_dim);
    const Tensor weights = num::softmax_rows(num::scale(num::matmul_nt(qh, kh), inv_sqrt));
    outs.push_back(num::matmul(weights, vh));
  }
  const Tensor merged = heads == 1 ? outs.front() : num::concat_cols(outs);
  return apply(attn.output, merged);
}

Tensor encode(const Tensor& tokens, const ModelParams& params) {
  const auto& cfg = params.config;
  Tensor x = num::add(tokens, interpolate(params.temporal, tokens.shape()[0]));
  for (const auto& layer : params.encoder) {
    const Tensor h = apply(layer.norm1, x);
    x = num::add(x, multi_head_attention(layer.self_attn, h, h, cfg.heads, cfg.head_dim));
    x = num::add(x, feed_forward(layer.ffn, apply(layer.norm2, x)));
  }
  return x;
}

Tensor decode(const Tensor& memory, const ModelParams& params) {
  const auto& cfg = params.config;
  Tensor q = params.queries;
  for (const auto& layer : params.decoder) {
    const Tensor h = apply(layer.norm1, q);
    q = num::add(q, multi_head_attention(layer.self_attn, h, h, cfg.heads, cfg.head_dim));
    q = num::add(q, multi_head_attention(layer.cross_attn, apply(layer.norm2, q), memory, cfg.heads, cfg.head_dim));
    q = num::add(q, feed_forward(layer.ffn, apply(layer.norm3, q)));
  }
  return q;
}

MomentPrediction project(const Tensor& decoded, const ModelParams& params) {
  const std::size_t d = params.config.model_dim;
  MomentPrediction p;
  p.visual = num::l2_normalize_rows(feed_forward(params.visual_head, decoded));
  const Tensor te = feed_forward(params.temporal_head, decoded);
  p.te_start = num::l2_normalize_rows(num::slice_cols(te, 0, d));
  p.te_end = num::l2_normalize_rows(num::slice_cols(te, d, d));
  return p;
}

MomentPrediction forward(const Tensor& features, const ModelParams& params) {
  return project(decode(encode(tokenize(features, params), params), params), params);
}

}  // namespace mset
