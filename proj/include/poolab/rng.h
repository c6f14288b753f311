// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef POOLAB_RNG_H_
#define POOLAB_RNG_H_

#include <algorithm>
#include <cstdint>
#include <random>

#include "poolab/ndarray.h"

namespace poolab {

// Seeded generator shared by initialization, shuffling and data synthesis.
// Streams are reproducible bit-for-bit on a given standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double Uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // Uniform integer in [lo, hi].
  std::int64_t Int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  std::size_t Index(std::size_t n) { return static_cast<std::size_t>(Int(0, static_cast<std::int64_t>(n) - 1)); }
  bool Bernoulli(double p) { return Uniform() < p; }

  NdArray NormalArray(Shape shape, double stddev) {
    NdArray a(std::move(shape));
    for (double& v : a.data()) v = Normal(0.0, stddev);
    return a;
  }

  template <typename It>
  void Shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace poolab

#endif  // POOLAB_RNG_H_
