// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "poolab/errors.h"
#include "poolab/synthetic.h"
#include "test_util.h"

namespace poolab {
namespace {

using testing::CheckGradients;

NdArray UnitRows(NdArray a) {
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    double n = 0.0;
    for (double v : a.row(i)) n += v * v;
    n = std::sqrt(n);
    for (std::size_t j = 0; j < a.dim(1); ++j) a.at(i, j) /= n;
  }
  return a;
}

double LoopLoss(const NdArray& q, const NdArray& c, std::span<const std::size_t> pos, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.dim(0); ++i) {
    std::vector<double> logits(c.dim(0));
    double mx = -1e300;
    for (std::size_t k = 0; k < c.dim(0); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.dim(1); ++j) s += q.at(i, j) * c.at(k, j);
      logits[k] = s / tau;
      mx = std::max(mx, logits[k]);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total += mx + std::log(z) - logits[pos[i]];
  }
  return total / static_cast<double>(q.dim(0));
}

std::vector<std::size_t> Iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(FormatQuery, EmptyInstructionLeavesQuery) { EXPECT_EQ(FormatQuery("", "hello"), "hello"); }

TEST(FormatQuery, PrefixesInstruction) {
  EXPECT_EQ(FormatQuery("Retrieve semantically similar text.", "a cat"),
            "Instruct: Retrieve semantically similar text.\nQuery: a cat");
}

TEST(FormatQuery, InjectiveOverRandomPairs) {
  Rng rng(1);
  std::set<std::string> seen;
  std::set<std::pair<std::string, std::string>> pairs;
  auto word = [&] {
    std::string s;
    const std::size_t n = 1 + rng.Index(6);
    for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('a' + rng.Index(3));
    if (rng.Bernoulli(0.3)) s += " q";
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const std::string ins = word(), q = word();
    if (!pairs.insert({ins, q}).second) continue;
    EXPECT_TRUE(seen.insert(FormatQuery(ins, q)).second) << ins << " / " << q;
  }
}

TEST(InfoNce, UniformSimilarityGivesLogOfCandidateCount) {
  const NdArray q({4, 3}, std::vector<double>(12, 1.0 / std::sqrt(3.0)));
  const NdArray c({8, 3}, std::vector<double>(24, 1.0 / std::sqrt(3.0)));
  const auto pos = Iota(4);
  EXPECT_NEAR(InfoNceLoss(q, c, pos, 0.05), std::log(8.0), 1e-12);
  EXPECT_NEAR(InfoNceLoss(q, c, pos, 0.05), 2.0794415, 1e-7);
}

TEST(InfoNce, SeparatedPositiveHandValue) {
  // cos(q, p) = 1 and every other cosine is -1.
  NdArray q({4, 2}), c({8, 2});
  for (std::size_t i = 0; i < 4; ++i) q.at(i, 0) = 1.0;
  c.at(0, 0) = 1.0;
  for (std::size_t k = 1; k < 8; ++k) c.at(k, 0) = -1.0;
  const std::vector<std::size_t> pos(4, 0);
  const double want = std::log1p(7.0 * std::exp(-40.0));
  EXPECT_NEAR(want, 2.97e-17, 1e-19);
  // Logits of magnitude 20 leave a resolution of a few ulps near 20.
  EXPECT_NEAR(InfoNceLoss(q, c, pos, 0.05), want, 1e-14);
}

TEST(InfoNce, MatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const NdArray q = UnitRows(rng.NormalArray({5, 7}, 1.0));
    const NdArray c = UnitRows(rng.NormalArray({10, 7}, 1.0));
    const auto pos = Iota(5);
    const double got = InfoNceLoss(q, c, pos, 0.05);
    EXPECT_NEAR(got, LoopLoss(q, c, pos, 0.05), 1e-10);
    EXPECT_GE(got, 0.0);
  }
}

TEST(InfoNce, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Var q = Var::Parameter(rng.NormalArray({4, 6}, 1.0));
    Var c = Var::Parameter(rng.NormalArray({8, 6}, 1.0));
    const auto pos = Iota(4);
    auto loss = [&] {
      return InfoNceLoss(ops::L2NormalizeRows(q), ops::L2NormalizeRows(c), pos, 0.05);
    };
    for (const auto& r : CheckGradients(loss, {{"queries", q}, {"candidates", c}}, 1e-5)) {
      EXPECT_LT(r.rel_error, 1e-4) << r.name << " seed " << seed;
    }
  }
}

TEST(InfoNce, InvariantUnderCommonBatchPermutation) {
  Rng rng(3);
  const std::size_t b = 6;
  const NdArray q = UnitRows(rng.NormalArray({b, 5}, 1.0));
  const NdArray c = UnitRows(rng.NormalArray({2 * b, 5}, 1.0));
  std::vector<std::size_t> perm = Iota(b);
  rng.Shuffle(perm.begin(), perm.end());
  NdArray qp({b, 5}), cp({2 * b, 5});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      qp.at(i, j) = q.at(perm[i], j);
      cp.at(i, j) = c.at(perm[i], j);
      cp.at(b + i, j) = c.at(b + perm[i], j);
    }
  const auto pos = Iota(b);
  EXPECT_NEAR(InfoNceLoss(q, c, pos, 0.05), InfoNceLoss(qp, cp, pos, 0.05), 1e-12);
}

TEST(InfoNce, RejectsBadInputs) {
  const NdArray q({1, 2}, {1.0, 0.0});
  const NdArray c({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const std::vector<std::size_t> pos{0};
  EXPECT_THROW(InfoNceLoss(q, c, pos, 0.0), ConfigError);
  EXPECT_THROW(InfoNceLoss(q, c, pos, -1.0), ConfigError);
  EXPECT_THROW(InfoNceLoss(NdArray({1, 2}, {2.0, 0.0}), c, pos, 0.05), ContractError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.temperature = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(AdamW, MatchesReferenceStep) {
  // One step from m = v = 0 moves each weight by ~lr * sign(g), plus decay
  // on matrices only.
  Var w = Var::Parameter(NdArray({2, 2}, {1.0, -2.0, 0.5, 0.0}));
  Var b = Var::Parameter(NdArray({2}, {3.0, -1.0}));
  AdamW opt({w, b}, {.learning_rate = 0.1, .weight_decay = 0.5});
  opt.ZeroGrad();
  ops::Sum(ops::Add(ops::Mul(w, w), ops::Reshape(ops::TileLeading(b, 2), {2, 2}))).Backward();
  opt.Step();
  for (std::size_t i = 0; i < 4; ++i) {
    const double w0 = std::vector<double>{1.0, -2.0, 0.5, 0.0}[i];
    const double g = 2.0 * w0;
    const double step = g / (std::abs(g) + 1e-8);
    EXPECT_NEAR(w.value()[i], w0 - 0.1 * (step + 0.5 * w0), 1e-12);
  }
  EXPECT_NEAR(b.value()[0], 3.0 - 0.1 * (2.0 / (2.0 + 1e-8)), 1e-12);
  EXPECT_NEAR(b.value()[1], -1.0 - 0.1 * (2.0 / (2.0 + 1e-8)), 1e-12);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(AdamW, SecondStepUsesBiasCorrectedMoments) {
  Var w = Var::Parameter(NdArray({1}, {0.0}));
  AdamW opt({w}, {.learning_rate = 1.0, .weight_decay = 0.0});
  const double g1 = 1.0, g2 = 3.0;
  for (double g : {g1, g2}) {
    opt.ZeroGrad();
    ops::Sum(ops::Scale(w, g)).Backward();
    opt.Step();
  }
  const double m = 0.9 * 0.1 * g1 + 0.1 * g2, v = 0.999 * 0.001 * g1 * g1 + 0.001 * g2 * g2;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double w1 = -g1 / (g1 + 1e-8);
  EXPECT_NEAR(w.value()[0], w1 - mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
}

class TrainTest : public ::testing::Test {
 protected:
  static ModelConfig Tiny() {
    ModelConfig m;
    m.n_layers = 2;
    m.hidden_dim = 16;
    m.n_heads = 2;
    m.ffn_dim = 32;
    m.vocab_size = 512;
    m.max_seq_len = 32;
    return m;
  }
  static std::vector<TrainingExample> Data() {
    SyntheticOptions o;
    o.clusters = 4;
    o.size = 64;
    o.seed = 2;
    std::vector<TrainingExample> out;
    for (const auto& s : GenerateSynthetic(o).train) out.push_back(s.example);
    return out;
  }
};

TEST_F(TrainTest, StepZeroLossIsNearUniform) {
  const auto data = Data();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    PoolingConfig pc;
    EncoderModel m = EncoderModel::Init(Tiny(), pc, seed);
    TrainConfig tc;
    tc.batch_size = 16;
    tc.max_steps = 1;
    tc.seed = seed;
    const double loss0 = Train(m, data, tc).losses.at(0);
    EXPECT_NEAR(loss0 / std::log(32.0), 1.0, 0.10) << loss0;
  }
}

TEST_F(TrainTest, IdenticalSeedsGiveIdenticalTraces) {
  const auto data = Data();
  auto run = [&](std::uint64_t seed) {
    PoolingConfig pc;
    pc.kind = PoolingKind::kMultiLayerTrainable;
    EncoderModel m = EncoderModel::Init(Tiny(), pc, 1);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.max_steps = 5;
    tc.seed = seed;
    tc.learning_rate = 1e-3;
    std::vector<double> seen;
    const auto r = Train(m, data, tc, [&](std::size_t, double l) { seen.push_back(l); });
    EXPECT_EQ(seen, r.losses);
    return r.losses;
  };
  const auto a = run(4), b = run(4), c = run(5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST_F(TrainTest, LossDecreasesOnToyData) {
  const auto data = Data();
  PoolingConfig pc;
  EncoderModel m = EncoderModel::Init(Tiny(), pc, 0);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.max_steps = 60;
  tc.learning_rate = 3e-3;
  const auto losses = Train(m, data, tc).losses;
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

TEST_F(TrainTest, DivergenceAbortsWithDiagnostic) {
  const auto data = Data();
  PoolingConfig pc;
  EncoderModel m = EncoderModel::Init(Tiny(), pc, 0);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_steps = 5;
  tc.learning_rate = 1e200;
  try {
    Train(m, data, tc);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step"), std::string::npos) << msg;
    EXPECT_NE(msg.find("learning rate"), std::string::npos) << msg;
    EXPECT_NE(msg.find("gradient norm"), std::string::npos) << msg;
  }
}

TEST_F(TrainTest, RejectsEmptyDataAndBadExamples) {
  PoolingConfig pc;
  EncoderModel m = EncoderModel::Init(Tiny(), pc, 0);
  TrainConfig tc;
  EXPECT_THROW(Train(m, {}, tc), DataError);
  std::vector<TrainingExample> bad{{"", "q", "", "n"}};
  EXPECT_THROW(Train(m, bad, tc), DataError);
}

}  // namespace
}  // namespace poolab
