// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Micro decoder-style transformer backbone. The forward pass returns the
// outputs of every block (the embedding-table output is not part of the
// stack) plus the validity mask, and the self-attention mask is switchable
// between causal and bidirectional.

#ifndef POOLAB_TRANSFORMER_H_
#define POOLAB_TRANSFORMER_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poolab/autodiff.h"
#include "poolab/ndarray.h"
#include "poolab/rng.h"

namespace poolab {

enum class AttentionMode { kCausal, kBidirectional };

std::string_view ToString(AttentionMode mode);
// Accepts "causal" / "bidirectional"; throws ConfigError otherwise.
AttentionMode ParseAttentionMode(std::string_view name);

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t hidden_dim = 64;
  std::size_t n_heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t vocab_size = 8192;
  std::size_t max_seq_len = 64;
  AttentionMode attention = AttentionMode::kCausal;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  std::size_t eos_id() const { return vocab_size - 1; }
  std::size_t head_dim() const { return hidden_dim / n_heads; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TokenSequence {
  std::vector<std::size_t> ids;
  std::size_t valid_len() const { return ids.size(); }
};

// Lowercased word-level tokens (alphanumeric runs; every other
// non-whitespace byte is its own token) hashed into [0, vocab_size - 2],
// truncated to max_seq_len - 1 and terminated by the EOS id.
TokenSequence Tokenize(std::string_view text, const ModelConfig& config);

struct BlockParams {
  Var ln1_gamma, ln1_beta;
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  Var ln2_gamma, ln2_beta;
  Var w1, b1, w2, b2;
};

struct BackboneParams {
  Var token_embedding;     // [vocab x d]
  Var position_embedding;  // [max_seq_len x d]
  std::vector<BlockParams> blocks;

  static BackboneParams Init(const ModelConfig& config, Rng& rng);
  // Stable names used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Var>> Named() const;
};

// Per-layer token states of a padded batch.
struct HiddenStates {
  std::vector<Var> layers;  // n_layers entries, each [batch * seq_len x dim]
  std::size_t batch = 0;
  std::size_t seq_len = 0;  // padded length
  std::size_t dim = 0;
  std::vector<std::size_t> valid_len;
  AttentionMode mode = AttentionMode::kCausal;

  std::size_t n_layers() const { return layers.size(); }
  std::span<const double> State(std::size_t layer, std::size_t item,
                                std::size_t pos) const;
  // [n_layers x valid_len x dim] copy of one item.
  NdArray ItemArray(std::size_t item) const;

  // From a [l x n x d] (single item) or [l x b x n x d] array.
  static HiddenStates FromArray(const NdArray& h, std::vector<std::size_t> valid_len,
                                AttentionMode mode);
};

// Runs the backbone. If `attention` is non-null it receives one
// [batch * n_heads x seq_len x seq_len] probability tensor per layer.
// Throws LengthError for sequences longer than max_seq_len.
HiddenStates Forward(std::span<const TokenSequence> batch, const ModelConfig& config,
                     const BackboneParams& params,
                     std::vector<NdArray>* attention = nullptr);

}  // namespace poolab

#endif  // POOLAB_TRANSFORMER_H_
