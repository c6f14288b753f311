// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Contrastive fine-tuning of backbone + pooler with instruction-prefixed
// queries, one positive and one hard negative per query, and in-batch
// negatives.

#ifndef POOLAB_TRAINING_H_
#define POOLAB_TRAINING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poolab/autodiff.h"
#include "poolab/pooling.h"

namespace poolab {

struct TrainingExample {
  std::string instruction;  // may be empty
  std::string query;
  std::string positive;
  std::string hard_negative;

  void Validate() const;  // throws DataError
};

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 64;
  std::size_t max_steps = 200;
  double temperature = 0.05;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;

  void Validate() const;  // throws ConfigError
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// "Instruct: {instruction}\nQuery: {query}", or the bare query when the
// instruction is empty.
std::string FormatQuery(std::string_view instruction, std::string_view query);

// Mean over queries of -log softmax_c(cos(q_i, c) / tau) at c = positive[i].
// Inputs must be row-wise unit norm.
Var InfoNceLoss(const Var& queries, const Var& candidates,
                std::span<const std::size_t> positive_index, double temperature);
double InfoNceLoss(const NdArray& queries, const NdArray& candidates,
                   std::span<const std::size_t> positive_index, double temperature);

// Decoupled weight decay Adam. Weight decay applies to matrices only.
class AdamW {
 public:
  struct Options {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(std::vector<Var> params, Options options);
  void ZeroGrad();
  void Step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<std::vector<double>> m_, v_;
  Options opt_;
  std::size_t t_ = 0;
};

using StepCallback = std::function<void(std::size_t step, double loss)>;

struct TrainResult {
  std::vector<double> losses;  // one per step
};

// Runs config.max_steps AdamW steps over seeded shuffled batches. Throws
// NumericError with step / learning rate / gradient norms on a non-finite loss.
TrainResult Train(EncoderModel& model, std::span<const TrainingExample> data,
                  const TrainConfig& config, const StepCallback& on_step = {});

}  // namespace poolab

#endif  // POOLAB_TRAINING_H_
