// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/training.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "poolab/errors.h"
#include "poolab/rng.h"

namespace poolab {

void TrainingExample::Validate() const {
  if (query.empty()) throw DataError("training example: empty query");
  if (positive.empty()) throw DataError("training example: empty positive");
  if (hard_negative.empty()) throw DataError("training example: empty negative");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate: must be positive");
  }
  if (batch_size < 2) {
    throw ConfigError("train.batch_size: must be at least 2 for in-batch negatives");
  }
  if (max_steps == 0) throw ConfigError("train.max_steps: must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("train.temperature: must be positive");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay: must be >= 0");
}

std::string FormatQuery(std::string_view instruction, std::string_view query) {
  if (instruction.empty()) return std::string(query);
  std::string out = "Instruct: ";
  out.append(instruction);
  out.append("\nQuery: ");
  out.append(query);
  return out;
}

namespace {

void CheckLossInputs(const NdArray& q, const NdArray& c,
                     std::span<const std::size_t> positive_index, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("train.temperature: must be positive");
  }
  if (q.rank() != 2 || c.rank() != 2 || q.dim(1) != c.dim(1)) {
    throw DimensionError("info_nce: query " + ShapeToString(q.shape()) + " vs candidates " +
                         ShapeToString(c.shape()));
  }
  if (positive_index.size() != q.dim(0)) {
    throw DimensionError("info_nce: one positive index per query required");
  }
  for (std::size_t p : positive_index) {
    if (p >= c.dim(0)) throw DimensionError("info_nce: positive index out of range");
  }
  for (const NdArray* a : {&q, &c}) {
    for (std::size_t i = 0; i < a->dim(0); ++i) {
      double ss = 0.0;
      for (double v : a->row(i)) ss += v * v;
      if (std::abs(std::sqrt(ss) - 1.0) > 1e-6) {
        throw ContractError("info_nce: embeddings must be L2-normalized");
      }
    }
  }
}

}  // namespace

Var InfoNceLoss(const Var& queries, const Var& candidates,
                std::span<const std::size_t> positive_index, double temperature) {
  CheckLossInputs(queries.value(), candidates.value(), positive_index, temperature);
  const double b = static_cast<double>(queries.shape()[0]);
  Var logits = ops::Scale(ops::MatMul(queries, ops::Transpose(candidates)), 1.0 / temperature);
  Var picked = ops::Pick(ops::LogSoftmax(logits), positive_index);
  return ops::Scale(ops::Sum(picked), -1.0 / b);
}

double InfoNceLoss(const NdArray& queries, const NdArray& candidates,
                   std::span<const std::size_t> positive_index, double temperature) {
  NoGradGuard guard;
  return InfoNceLoss(Var::Constant(queries), Var::Constant(candidates), positive_index,
                     temperature)
      .value()[0];
}

AdamW::AdamW(std::vector<Var> params, Options options)
    : params_(std::move(params)), opt_(options) {
  for (const Var& p : params_) {
    m_.emplace_back(p.value().size(), 0.0);
    v_.emplace_back(p.value().size(), 0.0);
  }
}

void AdamW::ZeroGrad() {
  for (Var& p : params_) p.ZeroGrad();
}

void AdamW::Step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (!p.has_grad()) continue;
    const NdArray& g = p.grad();
    NdArray& w = p.mutable_value();
    const bool decay = w.rank() >= 2 && opt_.weight_decay > 0.0;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g[j];
      v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      double update = mhat / (std::sqrt(vhat) + opt_.eps);
      if (decay) update += opt_.weight_decay * w[j];
      w[j] -= opt_.learning_rate * update;
    }
  }
}

namespace {

struct TokenizedExample {
  TokenSequence query, positive, negative;
};

// Infinite stream of seeded epoch permutations.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) { Refill(); }

  std::vector<std::size_t> Next(std::size_t b) {
    std::vector<std::size_t> out;
    while (out.size() < b) {
      if (pos_ == order_.size()) Refill();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void Refill() {
    std::iota(order_.begin(), order_.end(), 0);
    rng_.Shuffle(order_.begin(), order_.end());
    pos_ = 0;
  }

  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

std::string GradNormReport(const std::vector<std::pair<std::string, Var>>& params) {
  std::ostringstream os;
  double total = 0.0;
  for (const auto& [name, v] : params) {
    if (!v.has_grad()) continue;
    double ss = 0.0;
    for (double g : v.grad().data()) ss += g * g;
    total += ss;
    os << "\n  " << name << ": " << std::sqrt(ss);
  }
  return "total gradient norm " + std::to_string(std::sqrt(total)) + os.str();
}

}  // namespace

TrainResult Train(EncoderModel& model, std::span<const TrainingExample> data,
                  const TrainConfig& config, const StepCallback& on_step) {
  config.Validate();
  if (data.empty()) throw DataError("train: no training examples");
  std::vector<TokenizedExample> toks;
  toks.reserve(data.size());
  for (const TrainingExample& ex : data) {
    ex.Validate();
    toks.push_back({Tokenize(FormatQuery(ex.instruction, ex.query), model.model),
                    Tokenize(ex.positive, model.model),
                    Tokenize(ex.hard_negative, model.model)});
  }

  const auto named = model.Trainable();
  std::vector<Var> params;
  for (const auto& nv : named) params.push_back(nv.second);
  AdamW opt(params, {.learning_rate = config.learning_rate,
                     .weight_decay = config.weight_decay});
  BatchSampler sampler(toks.size(), config.seed);

  const std::size_t b = config.batch_size;
  std::vector<std::size_t> positive_index(b);
  std::iota(positive_index.begin(), positive_index.end(), 0);

  TrainResult result;
  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const std::vector<std::size_t> idx = sampler.Next(b);
    std::vector<TokenSequence> queries, candidates;
    for (std::size_t i : idx) queries.push_back(toks[i].query);
    for (std::size_t i : idx) candidates.push_back(toks[i].positive);
    for (std::size_t i : idx) candidates.push_back(toks[i].negative);

    opt.ZeroGrad();
    double loss_value = NAN;
    try {
      Var loss = InfoNceLoss(EncodeBatch(model, queries), EncodeBatch(model, candidates),
                             positive_index, config.temperature);
      loss_value = loss.value()[0];
      loss.Backward();
    } catch (const NumericError& e) {
      throw NumericError("train: non-finite value at step " + std::to_string(step) +
                         " (learning rate " + std::to_string(config.learning_rate) +
                         "): " + e.what() + "\n" + GradNormReport(named));
    }
    if (!std::isfinite(loss_value)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                         " (learning rate " + std::to_string(config.learning_rate) + ")\n" +
                         GradNormReport(named));
    }
    opt.Step();
    result.losses.push_back(loss_value);
    if (on_step) on_step(step, loss_value);
  }
  return result;
}

}  // namespace poolab
