// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Wilcoxon signed-rank test over per-dataset score differences and the
// pairwise model comparison report built on it.

#ifndef POOLAB_STATS_H_
#define POOLAB_STATS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolab/evaltasks.h"

namespace poolab {

enum class ZeroMethod {
  kWilcox,  // drop zero differences before ranking
  kPratt,   // rank zeros, then drop them from the sums
};

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double statistic = 0.0;  // min(w_plus, w_minus)
  double p_value = 1.0;    // two-sided
  std::size_t n_effective = 0;
  bool exact = true;
  bool no_information = false;  // every difference was zero
};

// Differences are y - x. Exact for n_effective <= 25, otherwise a normal
// approximation with tie and continuity corrections.
WilcoxonResult WilcoxonSignedRank(std::span<const double> x, std::span<const double> y,
                                  ZeroMethod zeros = ZeroMethod::kWilcox);

inline constexpr std::size_t kExactLimit = 25;

struct PairedScores {
  std::vector<std::string> datasets;
  std::vector<double> baseline;
  std::vector<double> challenger;

  void Validate() const;  // throws DataError
};

struct ComparisonRow {
  TaskKind task = TaskKind::kSts;
  std::size_t n_datasets = 0;
  double baseline_mean = 0.0;
  double challenger_mean = 0.0;
  double delta = 0.0;  // challenger_mean - baseline_mean
  WilcoxonResult test;
  bool significant = false;
  bool excluded = false;               // too few datasets for the test
  std::vector<std::string> undefined;  // datasets dropped for a missing score
};

struct ComparisonReport {
  std::string baseline_id;
  std::string challenger_id;
  std::vector<ComparisonRow> rows;  // task order: STS, Retrieval, Classification, Clustering
};

struct CompareOptions {
  double alpha = 0.05;
  std::size_t min_datasets = 5;  // tasks with fewer are excluded from testing
  ZeroMethod zeros = ZeroMethod::kWilcox;
};

// Pairs results per task by dataset name. Throws DataError listing the keys
// present on only one side.
ComparisonReport CompareModels(std::span<const EvalResult> baseline,
                               std::span<const EvalResult> challenger,
                               const CompareOptions& options = {});

// Fixed-width table: one baseline row, one delta row, asterisk on
// significant deltas.
std::string RenderReportText(const ComparisonReport& report);
std::string RenderReportJson(const ComparisonReport& report);

}  // namespace poolab

#endif  // POOLAB_STATS_H_
