// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Pooling strategies mapping per-layer hidden states to one embedding:
// EOS-last, mean, last-layer trainable pooling and multi-layer trainable
// pooling.
//
// The trainable heads share one structure. The input rows (token states of
// the last layer, or one summary vector per layer offset by a trainable
// layer-weight matrix) are projected to keys and values, a fixed set of
// trainable latent queries cross-attends over them, the latent outputs are
// reduced to one vector and a two-layer GELU MLP produces the embedding.

#ifndef POOLAB_POOLING_H_
#define POOLAB_POOLING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poolab/autodiff.h"
#include "poolab/ndarray.h"
#include "poolab/rng.h"
#include "poolab/transformer.h"

namespace poolab {

enum class PoolingKind { kEosLast, kMean, kLastLayerTrainable, kMultiLayerTrainable };

std::string_view ToString(PoolingKind kind);
// "eos_last", "mean", "last_layer", "multi_layer".
PoolingKind ParsePoolingKind(std::string_view name);

enum class LatentReduction { kMean, kConcat };

std::string_view ToString(LatentReduction r);
LatentReduction ParseLatentReduction(std::string_view name);

struct PoolingConfig {
  PoolingKind kind = PoolingKind::kEosLast;
  // Zero means "same as hidden_dim" for latents / inner_dim / out_dim and
  // "2 * inner_dim" for mlp_hidden.
  std::size_t latents = 0;
  std::size_t inner_dim = 0;
  std::size_t heads = 4;
  std::size_t mlp_hidden = 0;
  std::size_t out_dim = 0;
  LatentReduction reduction = LatentReduction::kMean;

  bool trainable() const {
    return kind == PoolingKind::kLastLayerTrainable ||
           kind == PoolingKind::kMultiLayerTrainable;
  }
  // Copy with every zero default filled in from the backbone config.
  PoolingConfig Resolved(const ModelConfig& model) const;
  // Throws ConfigError for bad sizes or an EOS-last + bidirectional pairing.
  void Validate(const ModelConfig& model) const;
  std::size_t embedding_dim(const ModelConfig& model) const;

  friend bool operator==(const PoolingConfig&, const PoolingConfig&) = default;
};

struct PoolerParams {
  Var layer_weights;   // [l x d]; stays zero and untrained for last-layer pooling
  Var key_proj;        // [d x d']
  Var value_proj;      // [d x d']
  Var latent_queries;  // [r x d']
  std::size_t heads = 1;
  LatentReduction reduction = LatentReduction::kMean;
  Var mlp_w1, mlp_b1;  // [d' (or r*d') x m], [m]
  Var mlp_w2, mlp_b2;  // [m x d_out], [d_out]

  static PoolerParams Init(const PoolingConfig& config, const ModelConfig& model, Rng& rng);
  std::vector<std::pair<std::string, Var>> Named() const;
};

enum class SummaryProvenance { kCausalEos, kBidirectionalMean };

struct LayerSummary {
  NdArray values;  // [l x d]
  SummaryProvenance provenance = SummaryProvenance::kCausalEos;
};

struct Embedding {
  NdArray vector;
  bool normalized = false;
};

enum class TrainableMode { kLastLayer, kMultiLayer };

// Single-item pooling over item `item` of `h`.
Embedding PoolEosLast(const HiddenStates& h, std::size_t item = 0);
Embedding PoolMean(const HiddenStates& h, std::size_t item = 0);
LayerSummary SummarizeLayers(const HiddenStates& h, std::size_t item = 0);
// input: LayerSummary values [l x d] (multi-layer) or valid last-layer token
// states [n x d] (last-layer).
Embedding PoolTrainable(const NdArray& input, const PoolerParams& params, TrainableMode mode);

// Differentiable batched forms. Rows follow item order.
Var PoolEosLastBatch(const HiddenStates& h);                  // [b x d]
Var PoolMeanBatch(const HiddenStates& h);                     // [b x d]
Var SummarizeLayersBatch(const HiddenStates& h);              // [b*l x d]
// `input` is [b*k x d]; `keep` (b*k flags, empty = all kept) masks padded rows.
Var PoolTrainableBatch(const Var& input, std::size_t b, std::size_t k,
                       std::span<const std::uint8_t> keep, const PoolerParams& params,
                       TrainableMode mode);
// Unnormalized embeddings of every item for the configured strategy.
Var PoolBatch(const HiddenStates& h, PoolingKind kind, const PoolerParams* params);

// Backbone + pooling head, the unit that is trained, saved and evaluated.
struct EncoderModel {
  ModelConfig model;
  PoolingConfig pooling;  // resolved
  BackboneParams backbone;
  std::optional<PoolerParams> pooler;

  static EncoderModel Init(const ModelConfig& model, const PoolingConfig& pooling,
                           std::uint64_t seed);
  std::size_t embedding_dim() const { return pooling.embedding_dim(model); }
  // Every tensor that is persisted, in a stable order.
  std::vector<std::pair<std::string, Var>> NamedTensors() const;
  // Tensors updated by training (excludes the fixed-zero layer weights of
  // last-layer pooling).
  std::vector<std::pair<std::string, Var>> Trainable() const;
};

// L2-normalized embeddings [b x d_out]; differentiable.
Var EncodeBatch(const EncoderModel& model, std::span<const TokenSequence> batch);
// Tokenizes, encodes in chunks without building a graph. Rows are unit norm.
NdArray Encode(const EncoderModel& model, std::span<const std::string> texts,
               std::size_t chunk = 64);
// Per-layer summaries [n_texts][l x d] (EOS under causal, mean under
// bidirectional).
std::vector<LayerSummary> EncodeLayerSummaries(const EncoderModel& model,
                                               std::span<const std::string> texts,
                                               std::size_t chunk = 64);

}  // namespace poolab

#endif  // POOLAB_POOLING_H_
