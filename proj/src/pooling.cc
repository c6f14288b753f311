// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/pooling.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "poolab/errors.h"

namespace poolab {

std::string_view ToString(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::kEosLast: return "eos_last";
    case PoolingKind::kMean: return "mean";
    case PoolingKind::kLastLayerTrainable: return "last_layer";
    case PoolingKind::kMultiLayerTrainable: return "multi_layer";
  }
  return "?";
}

PoolingKind ParsePoolingKind(std::string_view name) {
  for (PoolingKind k : {PoolingKind::kEosLast, PoolingKind::kMean,
                        PoolingKind::kLastLayerTrainable,
                        PoolingKind::kMultiLayerTrainable}) {
    if (name == ToString(k)) return k;
  }
  throw ConfigError("pooling.strategy: unknown strategy '" + std::string(name) +
                    "' (expected eos_last, mean, last_layer or multi_layer)");
}

std::string_view ToString(LatentReduction r) {
  return r == LatentReduction::kMean ? "mean" : "concat";
}

LatentReduction ParseLatentReduction(std::string_view name) {
  if (name == "mean") return LatentReduction::kMean;
  if (name == "concat") return LatentReduction::kConcat;
  throw ConfigError("pooling.latent_reduction: unknown value '" + std::string(name) +
                    "' (expected mean or concat)");
}

PoolingConfig PoolingConfig::Resolved(const ModelConfig& model) const {
  PoolingConfig c = *this;
  if (c.latents == 0) c.latents = model.hidden_dim;
  if (c.inner_dim == 0) c.inner_dim = model.hidden_dim;
  if (c.mlp_hidden == 0) c.mlp_hidden = 2 * c.inner_dim;
  if (c.out_dim == 0) c.out_dim = model.hidden_dim;
  return c;
}

void PoolingConfig::Validate(const ModelConfig& model) const {
  if (kind == PoolingKind::kEosLast && model.attention == AttentionMode::kBidirectional) {
    throw ConfigError(
        "pooling.strategy: eos_last pooling cannot be combined with bidirectional "
        "attention");
  }
  if (!trainable()) return;
  const PoolingConfig c = Resolved(model);
  if (c.heads == 0) throw ConfigError("pooling.heads: must be positive");
  if (c.inner_dim % c.heads != 0) {
    throw ConfigError("pooling.heads: must divide pooling.inner_dim");
  }
}

std::size_t PoolingConfig::embedding_dim(const ModelConfig& model) const {
  return trainable() ? Resolved(model).out_dim : model.hidden_dim;
}

PoolerParams PoolerParams::Init(const PoolingConfig& config, const ModelConfig& model,
                                Rng& rng) {
  const PoolingConfig c = config.Resolved(model);
  c.Validate(model);
  const std::size_t d = model.hidden_dim, dp = c.inner_dim;
  const std::size_t reduced = c.reduction == LatentReduction::kMean ? dp : c.latents * dp;
  auto fan_in = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  PoolerParams p;
  p.heads = c.heads;
  p.reduction = c.reduction;
  p.layer_weights = Var::Parameter(NdArray({model.n_layers, d}));
  p.key_proj = Var::Parameter(rng.NormalArray({d, dp}, fan_in(d)));
  p.value_proj = Var::Parameter(rng.NormalArray({d, dp}, fan_in(d)));
  p.latent_queries = Var::Parameter(rng.NormalArray({c.latents, dp}, 0.02));
  p.mlp_w1 = Var::Parameter(rng.NormalArray({reduced, c.mlp_hidden}, fan_in(reduced)));
  p.mlp_b1 = Var::Parameter(NdArray({c.mlp_hidden}));
  p.mlp_w2 = Var::Parameter(rng.NormalArray({c.mlp_hidden, c.out_dim}, fan_in(c.mlp_hidden)));
  p.mlp_b2 = Var::Parameter(NdArray({c.out_dim}));
  return p;
}

std::vector<std::pair<std::string, Var>> PoolerParams::Named() const {
  return {{"pooler.layer_weights", layer_weights}, {"pooler.key_proj", key_proj},
          {"pooler.value_proj", value_proj},       {"pooler.latent_queries", latent_queries},
          {"pooler.mlp_w1", mlp_w1},               {"pooler.mlp_b1", mlp_b1},
          {"pooler.mlp_w2", mlp_w2},               {"pooler.mlp_b2", mlp_b2}};
}

namespace {

void RequireCausal(const HiddenStates& h) {
  if (h.mode != AttentionMode::kCausal) {
    throw ConfigError("eos_last pooling requires causal attention");
  }
}

Embedding RowOf(const Var& v, std::size_t row) {
  auto r = v.value().row(row);
  return Embedding{NdArray({r.size()}, std::vector<double>(r.begin(), r.end())), false};
}

std::vector<std::size_t> EosRows(const HiddenStates& h) {
  std::vector<std::size_t> rows(h.batch);
  for (std::size_t i = 0; i < h.batch; ++i) rows[i] = i * h.seq_len + h.valid_len[i] - 1;
  return rows;
}

}  // namespace

Var PoolEosLastBatch(const HiddenStates& h) {
  RequireCausal(h);
  return ops::GatherRows(h.layers.back(), EosRows(h));
}

Var PoolMeanBatch(const HiddenStates& h) {
  return ops::SegmentMean(h.layers.back(), h.seq_len, h.valid_len);
}

Var SummarizeLayersBatch(const HiddenStates& h) {
  std::vector<Var> per_layer;
  const std::vector<std::size_t> eos = EosRows(h);
  for (const Var& layer : h.layers) {
    per_layer.push_back(h.mode == AttentionMode::kCausal
                            ? ops::GatherRows(layer, eos)
                            : ops::SegmentMean(layer, h.seq_len, h.valid_len));
  }
  return ops::Reshape(ops::Stack(per_layer, 1), {h.batch * h.n_layers(), h.dim});
}

Embedding PoolEosLast(const HiddenStates& h, std::size_t item) {
  RequireCausal(h);
  NoGradGuard guard;
  return RowOf(h.layers.back(), item * h.seq_len + h.valid_len.at(item) - 1);
}

Embedding PoolMean(const HiddenStates& h, std::size_t item) {
  NoGradGuard guard;
  return RowOf(PoolMeanBatch(h), item);
}

LayerSummary SummarizeLayers(const HiddenStates& h, std::size_t item) {
  NoGradGuard guard;
  const Var all = SummarizeLayersBatch(h);
  const std::size_t l = h.n_layers(), d = h.dim;
  NdArray values({l, d});
  std::copy_n(all.value().raw() + item * l * d, l * d, values.raw());
  return LayerSummary{std::move(values), h.mode == AttentionMode::kCausal
                                             ? SummaryProvenance::kCausalEos
                                             : SummaryProvenance::kBidirectionalMean};
}

Var PoolTrainableBatch(const Var& input, std::size_t b, std::size_t k,
                       std::span<const std::uint8_t> keep, const PoolerParams& params,
                       TrainableMode mode) {
  const NdArray& iv = input.value();
  const std::size_t d = params.key_proj.shape()[0];
  if (iv.rank() != 2 || iv.dim(0) != b * k || iv.dim(1) != d) {
    throw DimensionError("pool_trainable: input " + ShapeToString(iv.shape()) +
                         " does not match [" + std::to_string(b * k) + "x" +
                         std::to_string(d) + "]");
  }
  if (!keep.empty() && keep.size() != b * k) {
    throw DimensionError("pool_trainable: mask size does not match input rows");
  }
  Var h = input;
  if (mode == TrainableMode::kMultiLayer) {
    if (params.layer_weights.shape() != Shape{k, d}) {
      throw DimensionError("pool_trainable: layer weights " +
                           ShapeToString(params.layer_weights.shape()) + " vs " +
                           std::to_string(k) + " layers of width " + std::to_string(d));
    }
    h = ops::Add(h, ops::Reshape(ops::TileLeading(params.layer_weights, b), {b * k, d}));
  }
  const std::size_t dp = params.key_proj.shape()[1];
  const std::size_t r = params.latent_queries.shape()[0];
  const std::size_t heads = params.heads;
  if (params.latent_queries.shape()[1] != dp || heads == 0 || dp % heads != 0) {
    throw DimensionError("pool_trainable: latent queries " +
                         ShapeToString(params.latent_queries.shape()) +
                         " inconsistent with inner dim " + std::to_string(dp));
  }
  const std::size_t dh = dp / heads;
  static constexpr std::size_t kSplit[] = {0, 2, 1, 3};
  static constexpr std::size_t kQ[] = {1, 0, 2};

  auto split = [&](const Var& x) {
    return ops::Reshape(ops::Permute(ops::Reshape(x, {b, k, heads, dh}), kSplit),
                        {b * heads, k, dh});
  };
  Var keys = split(ops::MatMul(h, params.key_proj));
  Var values = split(ops::MatMul(h, params.value_proj));
  Var queries = ops::Permute(ops::Reshape(params.latent_queries, {r, heads, dh}), kQ);
  queries = ops::Reshape(ops::TileLeading(queries, b), {b * heads, r, dh});

  std::vector<std::uint8_t> mask(b * heads * r * k, 1);
  if (!keep.empty()) {
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t hh = 0; hh < heads; ++hh)
        for (std::size_t q = 0; q < r; ++q)
          std::copy_n(keep.data() + i * k, k, mask.data() + ((i * heads + hh) * r + q) * k);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var attn = ops::MaskedSoftmax(ops::Scale(ops::BatchedMatMul(queries, keys, true), scale), mask);
  Var latent = ops::BatchedMatMul(attn, values);  // [b*heads x r x dh]
  latent = ops::Reshape(ops::Permute(ops::Reshape(latent, {b, heads, r, dh}), kSplit),
                        {b, r, dp});
  Var reduced = params.reduction == LatentReduction::kMean
                    ? ops::Mean(latent, 1)
                    : ops::Reshape(latent, {b, r * dp});
  if (reduced.shape()[1] != params.mlp_w1.shape()[0]) {
    throw DimensionError("pool_trainable: MLP input width " +
                         ShapeToString(params.mlp_w1.shape()) + " vs " +
                         ShapeToString(reduced.shape()));
  }
  Var hidden = ops::Gelu(ops::AddBias(ops::MatMul(reduced, params.mlp_w1), params.mlp_b1));
  return ops::AddBias(ops::MatMul(hidden, params.mlp_w2), params.mlp_b2);
}

Embedding PoolTrainable(const NdArray& input, const PoolerParams& params, TrainableMode mode) {
  if (input.rank() != 2) {
    throw DimensionError("pool_trainable: expected 2-D input, got " +
                         ShapeToString(input.shape()));
  }
  NoGradGuard guard;
  Var out = PoolTrainableBatch(Var::Constant(input), 1, input.dim(0), {}, params, mode);
  return RowOf(out, 0);
}

Var PoolBatch(const HiddenStates& h, PoolingKind kind, const PoolerParams* params) {
  switch (kind) {
    case PoolingKind::kEosLast:
      return PoolEosLastBatch(h);
    case PoolingKind::kMean:
      return PoolMeanBatch(h);
    case PoolingKind::kLastLayerTrainable: {
      if (!params) throw ContractError("last_layer pooling without pooler params");
      std::vector<std::uint8_t> keep(h.batch * h.seq_len, 0);
      for (std::size_t i = 0; i < h.batch; ++i)
        std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(i * h.seq_len), h.valid_len[i], 1);
      return PoolTrainableBatch(h.layers.back(), h.batch, h.seq_len, keep, *params,
                                TrainableMode::kLastLayer);
    }
    case PoolingKind::kMultiLayerTrainable:
      if (!params) throw ContractError("multi_layer pooling without pooler params");
      return PoolTrainableBatch(SummarizeLayersBatch(h), h.batch, h.n_layers(), {}, *params,
                                TrainableMode::kMultiLayer);
  }
  throw ContractError("unknown pooling kind");
}

EncoderModel EncoderModel::Init(const ModelConfig& model, const PoolingConfig& pooling,
                                std::uint64_t seed) {
  model.Validate();
  pooling.Validate(model);
  EncoderModel m;
  m.model = model;
  m.pooling = pooling.Resolved(model);
  Rng rng(seed);
  m.backbone = BackboneParams::Init(model, rng);
  if (m.pooling.trainable()) m.pooler = PoolerParams::Init(m.pooling, model, rng);
  return m;
}

std::vector<std::pair<std::string, Var>> EncoderModel::NamedTensors() const {
  auto out = backbone.Named();
  if (pooler) {
    auto p = pooler->Named();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::pair<std::string, Var>> EncoderModel::Trainable() const {
  auto all = NamedTensors();
  if (pooling.kind == PoolingKind::kLastLayerTrainable) {
    std::erase_if(all, [](const auto& nv) { return nv.first == "pooler.layer_weights"; });
  }
  return all;
}

Var EncodeBatch(const EncoderModel& model, std::span<const TokenSequence> batch) {
  model.pooling.Validate(model.model);
  HiddenStates h = Forward(batch, model.model, model.backbone);
  return ops::L2NormalizeRows(
      PoolBatch(h, model.pooling.kind, model.pooler ? &*model.pooler : nullptr));
}

namespace {

// Runs fn(chunk_begin, chunk_end) over length-sorted chunks on worker
// threads. Outputs are written per index, so results do not depend on the
// schedule.
template <typename Fn>
void ForEachChunk(const std::vector<std::size_t>& order, std::size_t chunk, Fn&& fn) {
  const std::size_t n_chunks = (order.size() + chunk - 1) / chunk;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n_chunks));
  auto run = [&](std::size_t w) {
    NoGradGuard guard;
    for (std::size_t c = w; c < n_chunks; c += workers) {
      fn(c * chunk, std::min(order.size(), (c + 1) * chunk));
    }
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<TokenSequence> TokenizeAll(const EncoderModel& model,
                                       std::span<const std::string> texts,
                                       std::vector<std::size_t>& order) {
  std::vector<TokenSequence> toks;
  toks.reserve(texts.size());
  for (const std::string& t : texts) toks.push_back(Tokenize(t, model.model));
  order.resize(texts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return toks[a].ids.size() < toks[b].ids.size();
  });
  return toks;
}

}  // namespace

NdArray Encode(const EncoderModel& model, std::span<const std::string> texts,
               std::size_t chunk) {
  const std::size_t dim = model.embedding_dim();
  NdArray out({texts.size(), dim});
  if (texts.empty()) return out;
  std::vector<std::size_t> order;
  const std::vector<TokenSequence> toks = TokenizeAll(model, texts, order);
  ForEachChunk(order, std::max<std::size_t>(chunk, 1), [&](std::size_t lo, std::size_t hi) {
    std::vector<TokenSequence> batch;
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(toks[order[i]]);
    const Var emb = EncodeBatch(model, batch);
    for (std::size_t i = lo; i < hi; ++i)
      std::copy_n(emb.value().raw() + (i - lo) * dim, dim, out.raw() + order[i] * dim);
  });
  return out;
}

std::vector<LayerSummary> EncodeLayerSummaries(const EncoderModel& model,
                                               std::span<const std::string> texts,
                                               std::size_t chunk) {
  std::vector<LayerSummary> out(texts.size());
  if (texts.empty()) return out;
  std::vector<std::size_t> order;
  const std::vector<TokenSequence> toks = TokenizeAll(model, texts, order);
  ForEachChunk(order, std::max<std::size_t>(chunk, 1), [&](std::size_t lo, std::size_t hi) {
    std::vector<TokenSequence> batch;
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(toks[order[i]]);
    const HiddenStates h = Forward(batch, model.model, model.backbone);
    const Var all = SummarizeLayersBatch(h);
    const std::size_t l = h.n_layers(), d = h.dim;
    const SummaryProvenance prov = h.mode == AttentionMode::kCausal
                                       ? SummaryProvenance::kCausalEos
                                       : SummaryProvenance::kBidirectionalMean;
    for (std::size_t i = lo; i < hi; ++i) {
      NdArray values({l, d});
      std::copy_n(all.value().raw() + (i - lo) * l * d, l * d, values.raw());
      out[order[i]] = LayerSummary{std::move(values), prov};
    }
  });
  return out;
}

}  // namespace poolab
