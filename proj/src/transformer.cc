// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/transformer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include "poolab/errors.h"

namespace poolab {

std::string_view ToString(AttentionMode mode) {
  return mode == AttentionMode::kCausal ? "causal" : "bidirectional";
}

AttentionMode ParseAttentionMode(std::string_view name) {
  if (name == "causal") return AttentionMode::kCausal;
  if (name == "bidirectional") return AttentionMode::kBidirectional;
  throw ConfigError("model.attention: unknown attention mode '" + std::string(name) +
                    "' (expected causal or bidirectional)");
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string("model.") + field + ": " + what);
  };
  require(n_layers > 0, "n_layers", "must be positive");
  require(hidden_dim > 0, "hidden_dim", "must be positive");
  require(n_heads > 0, "n_heads", "must be positive");
  require(hidden_dim % std::max<std::size_t>(n_heads, 1) == 0, "n_heads",
          "must divide hidden_dim");
  require(ffn_dim > 0, "ffn_dim", "must be positive");
  require(vocab_size >= 2, "vocab_size", "must be at least 2");
  require(max_seq_len > 0, "max_seq_len", "must be positive");
}

namespace {

std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool IsWordByte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

TokenSequence Tokenize(std::string_view text, const ModelConfig& config) {
  const std::size_t buckets = config.vocab_size - 1;
  const std::size_t limit = config.max_seq_len - 1;
  TokenSequence seq;
  std::string word;
  auto emit = [&](std::string_view w) {
    if (seq.ids.size() < limit) seq.ids.push_back(Fnv1a(w) % buckets);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (IsWordByte(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    if (!word.empty()) {
      emit(word);
      word.clear();
    }
    if (!std::isspace(c)) emit(std::string_view(&text[i], 1));
  }
  if (!word.empty()) emit(word);
  seq.ids.push_back(config.eos_id());
  return seq;
}

BackboneParams BackboneParams::Init(const ModelConfig& config, Rng& rng) {
  config.Validate();
  const std::size_t d = config.hidden_dim, f = config.ffn_dim;
  constexpr double kStd = 0.02;
  // Small position init keeps untrained EOS states of different lengths close.
  constexpr double kPositionStd = 0.005;
  const double out_std = kStd / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  BackboneParams p;
  p.token_embedding = Var::Parameter(rng.NormalArray({config.vocab_size, d}, kStd));
  p.position_embedding = Var::Parameter(rng.NormalArray({config.max_seq_len, d}, kPositionStd));
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    BlockParams b;
    b.ln1_gamma = Var::Parameter(NdArray({d}, 1.0));
    b.ln1_beta = Var::Parameter(NdArray({d}));
    b.wq = Var::Parameter(rng.NormalArray({d, d}, kStd));
    b.bq = Var::Parameter(NdArray({d}));
    b.wk = Var::Parameter(rng.NormalArray({d, d}, kStd));
    b.bk = Var::Parameter(NdArray({d}));
    b.wv = Var::Parameter(rng.NormalArray({d, d}, kStd));
    b.bv = Var::Parameter(NdArray({d}));
    b.wo = Var::Parameter(rng.NormalArray({d, d}, out_std));
    b.bo = Var::Parameter(NdArray({d}));
    b.ln2_gamma = Var::Parameter(NdArray({d}, 1.0));
    b.ln2_beta = Var::Parameter(NdArray({d}));
    b.w1 = Var::Parameter(rng.NormalArray({d, f}, kStd));
    b.b1 = Var::Parameter(NdArray({f}));
    b.w2 = Var::Parameter(rng.NormalArray({f, d}, out_std));
    b.b2 = Var::Parameter(NdArray({d}));
    p.blocks.push_back(std::move(b));
  }
  return p;
}

std::vector<std::pair<std::string, Var>> BackboneParams::Named() const {
  std::vector<std::pair<std::string, Var>> out;
  out.emplace_back("backbone.token_embedding", token_embedding);
  out.emplace_back("backbone.position_embedding", position_embedding);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const BlockParams& b = blocks[l];
    const std::string pre = "backbone.block" + std::to_string(l) + ".";
    for (const auto& [name, v] : std::initializer_list<std::pair<const char*, const Var*>>{
             {"ln1_gamma", &b.ln1_gamma}, {"ln1_beta", &b.ln1_beta},
             {"wq", &b.wq}, {"bq", &b.bq}, {"wk", &b.wk}, {"bk", &b.bk},
             {"wv", &b.wv}, {"bv", &b.bv}, {"wo", &b.wo}, {"bo", &b.bo},
             {"ln2_gamma", &b.ln2_gamma}, {"ln2_beta", &b.ln2_beta},
             {"w1", &b.w1}, {"b1", &b.b1}, {"w2", &b.w2}, {"b2", &b.b2}}) {
      out.emplace_back(pre + name, *v);
    }
  }
  return out;
}

std::span<const double> HiddenStates::State(std::size_t layer, std::size_t item,
                                            std::size_t pos) const {
  return layers.at(layer).value().row(item * seq_len + pos);
}

NdArray HiddenStates::ItemArray(std::size_t item) const {
  const std::size_t n = valid_len.at(item);
  NdArray out({n_layers(), n, dim});
  for (std::size_t l = 0; l < n_layers(); ++l)
    for (std::size_t t = 0; t < n; ++t) {
      auto s = State(l, item, t);
      std::copy(s.begin(), s.end(), out.raw() + (l * n + t) * dim);
    }
  return out;
}

HiddenStates HiddenStates::FromArray(const NdArray& h, std::vector<std::size_t> valid_len,
                                     AttentionMode mode) {
  NdArray h4;
  if (h.rank() == 3) {
    h4 = h.Reshaped({h.dim(0), 1, h.dim(1), h.dim(2)});
  } else if (h.rank() == 4) {
    h4 = h;
  } else {
    throw DimensionError("HiddenStates expects [l x n x d] or [l x b x n x d], got " +
                         ShapeToString(h.shape()));
  }
  HiddenStates hs;
  hs.batch = h4.dim(1);
  hs.seq_len = h4.dim(2);
  hs.dim = h4.dim(3);
  hs.mode = mode;
  if (valid_len.empty()) valid_len.assign(hs.batch, hs.seq_len);
  if (valid_len.size() != hs.batch) {
    throw DimensionError("HiddenStates: " + std::to_string(valid_len.size()) +
                         " valid lengths for batch of " + std::to_string(hs.batch));
  }
  for (std::size_t v : valid_len) {
    if (v == 0 || v > hs.seq_len) throw ContractError("HiddenStates: invalid valid_len");
  }
  hs.valid_len = std::move(valid_len);
  const std::size_t per_layer = hs.batch * hs.seq_len * hs.dim;
  for (std::size_t l = 0; l < h4.dim(0); ++l) {
    std::vector<double> slab(h4.raw() + l * per_layer, h4.raw() + (l + 1) * per_layer);
    hs.layers.push_back(
        Var::Constant(NdArray({hs.batch * hs.seq_len, hs.dim}, std::move(slab))));
  }
  return hs;
}

namespace {

// [b*n x d] -> [b*h x n x dh]
Var SplitHeads(const Var& x, std::size_t b, std::size_t n, std::size_t h, std::size_t dh) {
  static constexpr std::size_t kAxes[] = {0, 2, 1, 3};
  return ops::Reshape(ops::Permute(ops::Reshape(x, {b, n, h, dh}), kAxes), {b * h, n, dh});
}

// [b*h x n x dh] -> [b*n x d]
Var MergeHeads(const Var& x, std::size_t b, std::size_t n, std::size_t h, std::size_t dh) {
  static constexpr std::size_t kAxes[] = {0, 2, 1, 3};
  return ops::Reshape(ops::Permute(ops::Reshape(x, {b, h, n, dh}), kAxes), {b * n, h * dh});
}

Var Linear(const Var& x, const Var& w, const Var& bias) {
  return ops::AddBias(ops::MatMul(x, w), bias);
}

}  // namespace

HiddenStates Forward(std::span<const TokenSequence> batch, const ModelConfig& config,
                     const BackboneParams& params, std::vector<NdArray>* attention) {
  if (batch.empty()) throw ContractError("forward: empty batch");
  const std::size_t b = batch.size();
  std::size_t n = 0;
  for (const TokenSequence& s : batch) {
    if (s.ids.empty()) throw ContractError("forward: empty token sequence");
    if (s.ids.size() > config.max_seq_len) {
      throw LengthError("forward: sequence of length " + std::to_string(s.ids.size()) +
                        " exceeds max_seq_len " + std::to_string(config.max_seq_len));
    }
    n = std::max(n, s.ids.size());
  }
  const std::size_t d = config.hidden_dim, h = config.n_heads, dh = config.head_dim();

  HiddenStates out;
  out.batch = b;
  out.seq_len = n;
  out.dim = d;
  out.mode = config.attention;

  std::vector<std::size_t> ids(b * n, config.eos_id());
  std::vector<std::size_t> positions(b * n);
  for (std::size_t i = 0; i < b; ++i) {
    std::copy(batch[i].ids.begin(), batch[i].ids.end(), ids.begin() + i * n);
    for (std::size_t t = 0; t < n; ++t) positions[i * n + t] = t;
    out.valid_len.push_back(batch[i].ids.size());
  }
  for (std::size_t id : ids) {
    if (id >= config.vocab_size) {
      throw DataError("forward: token id " + std::to_string(id) + " >= vocab_size");
    }
  }

  // keep[(item*h + head), i, j]: query i may attend key j.
  std::vector<std::uint8_t> keep(b * h * n * n, 0);
  const bool causal = config.attention == AttentionMode::kCausal;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t valid = out.valid_len[i];
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t k = 0; k < valid; ++k) {
        if (causal && k > q) break;
        for (std::size_t hh = 0; hh < h; ++hh) keep[((i * h + hh) * n + q) * n + k] = 1;
      }
  }

  Var x = ops::Add(ops::GatherRows(params.token_embedding, ids),
                   ops::GatherRows(params.position_embedding, positions));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const BlockParams& blk : params.blocks) {
    Var a = ops::LayerNorm(x, blk.ln1_gamma, blk.ln1_beta);
    Var q = SplitHeads(Linear(a, blk.wq, blk.bq), b, n, h, dh);
    Var k = SplitHeads(Linear(a, blk.wk, blk.bk), b, n, h, dh);
    Var v = SplitHeads(Linear(a, blk.wv, blk.bv), b, n, h, dh);
    Var probs = ops::MaskedSoftmax(ops::Scale(ops::BatchedMatMul(q, k, true), scale), keep);
    if (attention) attention->push_back(probs.value());
    Var ctx = MergeHeads(ops::BatchedMatMul(probs, v), b, n, h, dh);
    x = ops::Add(x, Linear(ctx, blk.wo, blk.bo));
    Var f = ops::LayerNorm(x, blk.ln2_gamma, blk.ln2_beta);
    f = Linear(ops::Gelu(Linear(f, blk.w1, blk.b1)), blk.w2, blk.b2);
    x = ops::Add(x, f);
    out.layers.push_back(x);
  }
  return out;
}

}  // namespace poolab
