// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/stats.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "poolab/errors.h"
#include "poolab/rng.h"

namespace poolab {
namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << path;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<EvalResult> Fixture(const std::string& name) {
  return ResultsFromJson(Slurp(std::string(POOLAB_SOURCE_DIR) + "/fixtures/" + name));
}

const ComparisonRow& Row(const ComparisonReport& r, TaskKind t) {
  for (const ComparisonRow& row : r.rows)
    if (row.task == t) return row;
  throw std::runtime_error("no row");
}

// Two-sided p by listing all 2^n sign patterns over average ranks of |d|,
// zeros removed first.
double BruteForceP(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> mags;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    if (std::abs(d) > 1e-12) mags.push_back(std::abs(d));
  }
  const std::size_t n = mags.size();
  if (n == 0) return 1.0;
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(mags[j] - mags[i]) <= 1e-12) ++equal;
      else if (mags[j] < mags[i]) ++below;
    }
    ranks[i] = below + (equal + 1) / 2;
  }
  double total = 0.0, observed_plus = 0.0;
  for (std::size_t i = 0, k = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    if (std::abs(d) <= 1e-12) continue;
    if (d > 0) observed_plus += ranks[k];
    total += ranks[k++];
  }
  const double observed = std::min(observed_plus, total - observed_plus);
  std::uint64_t extreme = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) plus += ranks[i];
    extreme += std::min(plus, total - plus) <= observed;
  }
  return static_cast<double>(extreme) / static_cast<double>(std::uint64_t{1} << n);
}

TEST(Wilcoxon, IdenticalSamplesCarryNoInformation) {
  const std::vector<double> x{0.1, 0.2, 0.3};
  const WilcoxonResult r = WilcoxonSignedRank(x, x);
  EXPECT_EQ(r.n_effective, 0u);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.no_information);
}

TEST(Wilcoxon, EightPositiveDifferences) {
  const std::vector<double> x{0.8530, 0.8255, 0.7147, 0.8464, 0.8055, 0.8777, 0.8529, 0.8659};
  const std::vector<double> y{0.8699, 0.8309, 0.7424, 0.8553, 0.8227, 0.8858, 0.8593, 0.8786};
  const WilcoxonResult r = WilcoxonSignedRank(x, y);
  EXPECT_EQ(r.p_value, 0.0078125);
  EXPECT_EQ(r.p_value, 2.0 / 256.0);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.w_plus, 36.0);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.n_effective, 8u);
}

TEST(Wilcoxon, SymmetricUnderSwap) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(12), y(12);
    for (std::size_t i = 0; i < 12; ++i) {
      x[i] = rng.Normal();
      y[i] = x[i] + rng.Normal(0.3, 1.0);
    }
    const WilcoxonResult a = WilcoxonSignedRank(x, y), b = WilcoxonSignedRank(y, x);
    EXPECT_EQ(a.statistic, b.statistic);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.w_plus, b.w_minus);
  }
}

TEST(Wilcoxon, InvariantUnderPositiveAffineMaps) {
  Rng rng(3);
  std::vector<double> x(15), y(15), fx(15), fy(15);
  for (std::size_t i = 0; i < 15; ++i) {
    x[i] = rng.Normal();
    y[i] = x[i] + rng.Normal(0.2, 1.0);
    fx[i] = 3.0 * x[i] + 1.0;
    fy[i] = 3.0 * y[i] + 1.0;
  }
  EXPECT_EQ(WilcoxonSignedRank(x, y).p_value, WilcoxonSignedRank(fx, fy).p_value);
}

TEST(Wilcoxon, ExactPMatchesEnumeration) {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(n * 1000 + seed);
      std::vector<double> x(n), y(n);
      // Even seeds draw small integers (many zeros and ties), odd seeds
      // continuous values.
      for (std::size_t i = 0; i < n; ++i) {
        if (seed % 2 == 0) {
          x[i] = static_cast<double>(rng.Int(0, 4));
          y[i] = static_cast<double>(rng.Int(0, 4));
        } else {
          x[i] = rng.Normal();
          y[i] = rng.Normal(0.3, 1.0);
        }
      }
      const WilcoxonResult r = WilcoxonSignedRank(x, y);
      EXPECT_EQ(r.p_value, BruteForceP(x, y)) << "n " << n << " seed " << seed;
      EXPECT_GT(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
    }
  }
}

TEST(Wilcoxon, PrattKeepsZerosInTheRanking) {
  // Differences 0, 1, -2, 3: Pratt ranks |d| as 1..4 and drops the zero's
  // rank, so W+ = 2 + 4 and W- = 3.
  const std::vector<double> x{0, 0, 0, 0}, y{0, 1, -2, 3};
  const WilcoxonResult p = WilcoxonSignedRank(x, y, ZeroMethod::kPratt);
  EXPECT_EQ(p.w_plus, 6.0);
  EXPECT_EQ(p.w_minus, 3.0);
  EXPECT_EQ(p.n_effective, 3u);
  const WilcoxonResult w = WilcoxonSignedRank(x, y, ZeroMethod::kWilcox);
  EXPECT_EQ(w.w_plus, 4.0);
  EXPECT_EQ(w.w_minus, 2.0);
}

// Reference values from scipy.stats.wilcoxon(d, zero_method="wilcox",
// correction=True, method="approx").
TEST(Wilcoxon, NormalApproximationMatchesReference) {
  struct Case {
    std::size_t n;
    double (*f)(int);
    double statistic, p, n_eff;
  };
  const Case cases[] = {
      {30, [](int i) { return ((i * 41) % 101 - 50) / 100.0; }, 215.0, 0.9654910036313868, 29},
      {40, [](int i) { return (i * i % 13 - 6) / 10.0; }, 400.0, 0.897779900128826, 40},
      {26, [](int i) { return i % 4 ? (i % 9 + 1) / 10.0 : -(i % 5 + 1) / 10.0; }, 59.5,
       0.0033024151436599493, 26},
  };
  for (const Case& c : cases) {
    std::vector<double> x(c.n, 0.0), y(c.n);
    for (std::size_t i = 0; i < c.n; ++i) y[i] = c.f(static_cast<int>(i) + 1);
    const WilcoxonResult r = WilcoxonSignedRank(x, y);
    EXPECT_FALSE(r.exact);
    EXPECT_EQ(r.statistic, c.statistic);
    EXPECT_EQ(static_cast<double>(r.n_effective), c.n_eff);
    EXPECT_NEAR(r.p_value, c.p, 1e-12) << c.n;
  }
}

TEST(Wilcoxon, RejectsBadInput) {
  EXPECT_THROW(WilcoxonSignedRank(std::vector<double>{1}, std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(WilcoxonSignedRank(std::vector<double>{}, std::vector<double>{}), ContractError);
}

TEST(CompareModels, FixtureStsModel1VersusModel2) {
  const ComparisonReport r = CompareModels(Fixture("results/model1.json"), Fixture("results/model2.json"));
  const ComparisonRow& sts = Row(r, TaskKind::kSts);
  EXPECT_EQ(sts.n_datasets, 8u);
  EXPECT_NEAR(sts.baseline_mean, 0.8302, 1e-4);
  EXPECT_NEAR(sts.delta, 0.0129, 1e-4);
  EXPECT_NEAR(sts.delta, sts.challenger_mean - sts.baseline_mean, 1e-9);
  EXPECT_EQ(sts.test.p_value, 0.0078125);
  EXPECT_TRUE(sts.test.exact);
  EXPECT_TRUE(sts.significant);
}

TEST(CompareModels, FixtureStsModel1VersusModel3) {
  const ComparisonReport r = CompareModels(Fixture("results/model1.json"), Fixture("results/model3.json"));
  const ComparisonRow& sts = Row(r, TaskKind::kSts);
  EXPECT_NEAR(sts.delta, 0.0118, 1e-4);
  EXPECT_TRUE(sts.significant);
}

TEST(CompareModels, FixtureMeansMatchPublishedAverages) {
  const ComparisonReport r = CompareModels(Fixture("results/model1.json"), Fixture("results/model1.json"));
  EXPECT_NEAR(Row(r, TaskKind::kRetrieval).baseline_mean, 0.5394, 1e-4);
  EXPECT_EQ(Row(r, TaskKind::kRetrieval).n_datasets, 14u);
  EXPECT_NEAR(Row(r, TaskKind::kSts).baseline_mean, 0.8302, 1e-4);
}

TEST(CompareModels, AlternateLabelingSwapsRetrievalMeans) {
  auto mean = [](const char* file) {
    const auto rs = Fixture(file);
    return Row(CompareModels(rs, rs), TaskKind::kRetrieval).baseline_mean;
  };
  EXPECT_NEAR(mean("results/model2.json"), mean("results_alt_labeling/model3.json"), 1e-12);
  EXPECT_NEAR(mean("results/model3.json"), mean("results_alt_labeling/model2.json"), 1e-12);
}

TEST(CompareModels, SelfComparisonIsNeverSignificant) {
  const auto m = Fixture("results/model4.json");
  for (const ComparisonRow& row : CompareModels(m, m).rows) {
    EXPECT_EQ(row.delta, 0.0);
    EXPECT_FALSE(row.significant);
    EXPECT_TRUE(row.test.no_information);
    EXPECT_EQ(row.test.p_value, 1.0);
  }
}

TEST(CompareModels, SignificanceEqualsThresholdPredicate) {
  for (const char* other : {"results/model2.json", "results/model3.json", "results/model4.json",
                            "results/model5.json"}) {
    for (const ComparisonRow& row : CompareModels(Fixture("results/model1.json"), Fixture(other)).rows) {
      EXPECT_EQ(row.significant, !row.excluded && row.test.p_value < 0.05);
    }
  }
}

TEST(CompareModels, MismatchedDatasetsListTheDifference) {
  auto a = Fixture("results/model1.json");
  auto b = Fixture("results/model2.json");
  a.erase(std::remove_if(a.begin(), a.end(), [](const EvalResult& r) { return r.dataset == "STS12"; }),
          a.end());
  b.push_back({"model2", TaskKind::kSts, "Extra", Metric::kSpearmanCosine, 0.5, {}});
  try {
    CompareModels(a, b);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("only in challenger: STS/Extra STS/STS12"), std::string::npos) << msg;
  }
}

TEST(CompareModels, FewDatasetsAreExcludedAndMissingScoresListed) {
  std::vector<EvalResult> a, b;
  for (int i = 0; i < 4; ++i) {
    a.push_back({"a", TaskKind::kSts, "d" + std::to_string(i), Metric::kSpearmanCosine, 0.1 * i, {}});
    b.push_back({"b", TaskKind::kSts, "d" + std::to_string(i), Metric::kSpearmanCosine, 0.1 * i + 0.05, {}});
  }
  b[3].score.reset();
  const ComparisonReport r = CompareModels(a, b);
  const ComparisonRow& row = Row(r, TaskKind::kSts);
  EXPECT_TRUE(row.excluded);
  EXPECT_FALSE(row.significant);
  EXPECT_EQ(row.n_datasets, 3u);
  EXPECT_EQ(row.undefined, std::vector<std::string>{"d3"});
  const std::string text = RenderReportText(r);
  EXPECT_NE(text.find("excluded from testing; n/a: d3"), std::string::npos) << text;
}

TEST(RenderReport, MatchesGoldenFile) {
  const ComparisonReport r = CompareModels(Fixture("results/model1.json"), Fixture("results/model2.json"));
  EXPECT_EQ(RenderReportText(r),
            Slurp(std::string(POOLAB_SOURCE_DIR) + "/tests/golden/compare_model1_model2.txt"));
  EXPECT_EQ(RenderReportJson(r),
            Slurp(std::string(POOLAB_SOURCE_DIR) + "/tests/golden/compare_model1_model2.json"));
}

TEST(RenderReport, EmptyReportHasOnlyHeaders) {
  const ComparisonReport r = CompareModels({}, {});
  const std::string text = RenderReportText(r);
  EXPECT_EQ(text.find("STS"), std::string::npos);
  EXPECT_NE(text.find("task"), std::string::npos);
}

}  // namespace
}  // namespace poolab
