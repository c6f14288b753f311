// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "poolab/errors.h"

namespace poolab {

namespace {

// Differences closer than this are treated as equal (decimal scores rarely
// subtract to bit-identical doubles).
constexpr double kTieTolerance = 1e-12;

// Twice the average rank of each magnitude, so tied ranks stay integral.
std::vector<std::uint64_t> DoubledRanks(const std::vector<double>& mags) {
  std::vector<std::size_t> idx(mags.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return mags[a] < mags[b]; });
  std::vector<std::uint64_t> r(mags.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && mags[idx[j + 1]] - mags[idx[j]] <= kTieTolerance) ++j;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = i + j + 2;
    i = j + 1;
  }
  return r;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult WilcoxonSignedRank(std::span<const double> x, std::span<const double> y,
                                  ZeroMethod zeros) {
  if (x.size() != y.size()) {
    throw DimensionError("wilcoxon: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (x.empty()) throw ContractError("wilcoxon: need at least one pair");

  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = y[i] - x[i];
    if (!std::isfinite(v)) throw DataError("wilcoxon: non-finite score");
    const bool zero = std::abs(v) <= kTieTolerance;
    if (zero && zeros == ZeroMethod::kWilcox) continue;
    d.push_back(zero ? 0.0 : v);
  }
  std::vector<double> mags(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mags[i] = std::abs(d[i]);
  const std::vector<std::uint64_t> r2 = DoubledRanks(mags);

  // Signed terms only (Pratt zeros keep their ranks but join neither sum).
  std::vector<std::uint64_t> terms;
  std::uint64_t plus2 = 0, minus2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) continue;
    terms.push_back(r2[i]);
    (d[i] > 0.0 ? plus2 : minus2) += r2[i];
  }

  WilcoxonResult res;
  res.n_effective = terms.size();
  res.w_plus = 0.5 * static_cast<double>(plus2);
  res.w_minus = 0.5 * static_cast<double>(minus2);
  res.statistic = std::min(res.w_plus, res.w_minus);
  if (terms.empty()) {
    res.p_value = 1.0;
    res.no_information = true;
    return res;
  }

  const std::uint64_t total2 = plus2 + minus2;
  const std::uint64_t w2 = std::min(plus2, minus2);
  if (terms.size() <= kExactLimit) {
    // counts[s] = number of sign assignments whose positive doubled-rank sum is s.
    std::vector<std::uint64_t> counts(total2 + 1, 0);
    counts[0] = 1;
    std::uint64_t reach = 0;
    for (std::uint64_t t : terms) {
      for (std::uint64_t s = reach + 1; s-- > 0;) {
        if (counts[s] != 0) counts[s + t] += counts[s];
      }
      reach += t;
    }
    std::uint64_t extreme = 0;
    for (std::uint64_t s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= w2) extreme += counts[s];
    }
    res.exact = true;
    res.p_value = static_cast<double>(extreme) /
                  static_cast<double>(std::uint64_t{1} << terms.size());
    return res;
  }

  double s2 = 0.0;
  for (std::uint64_t t : terms) s2 += 0.25 * static_cast<double>(t) * static_cast<double>(t);
  const double mean = 0.25 * static_cast<double>(total2);
  const double sd = std::sqrt(s2 / 4.0);
  const double z = (res.statistic - mean + 0.5) / sd;
  res.exact = false;
  res.p_value = std::min(1.0, 2.0 * NormalCdf(std::min(z, 0.0)));
  return res;
}

void PairedScores::Validate() const {
  if (datasets.size() != baseline.size() || datasets.size() != challenger.size()) {
    throw DataError("paired scores: lists have unequal lengths");
  }
  std::set<std::string> seen;
  for (const std::string& n : datasets) {
    if (!seen.insert(n).second) throw DataError("paired scores: duplicate dataset '" + n + "'");
  }
}

namespace {

using TaskMap = std::map<TaskKind, std::map<std::string, const EvalResult*>>;

TaskMap Index(std::span<const EvalResult> results, const char* side) {
  TaskMap m;
  for (const EvalResult& r : results) {
    if (!m[r.task].emplace(r.dataset, &r).second) {
      throw DataError(std::string(side) + ": duplicate result for " +
                      std::string(ToString(r.task)) + "/" + r.dataset);
    }
  }
  return m;
}

std::string ModelId(std::span<const EvalResult> results) {
  std::set<std::string> ids;
  for (const EvalResult& r : results) ids.insert(r.model_id);
  if (ids.size() > 1) {
    std::string all;
    for (const std::string& s : ids) all += (all.empty() ? "" : ", ") + s;
    throw DataError("results mix several model ids: " + all);
  }
  return ids.empty() ? std::string() : *ids.begin();
}

}  // namespace

ComparisonReport CompareModels(std::span<const EvalResult> baseline,
                               std::span<const EvalResult> challenger,
                               const CompareOptions& options) {
  ComparisonReport report;
  report.baseline_id = ModelId(baseline);
  report.challenger_id = ModelId(challenger);
  const TaskMap bm = Index(baseline, "baseline");
  const TaskMap cm = Index(challenger, "challenger");

  std::vector<std::string> only_b, only_c;
  std::set<TaskKind> tasks;
  for (const auto& [t, _] : bm) tasks.insert(t);
  for (const auto& [t, _] : cm) tasks.insert(t);
  static const std::map<std::string, const EvalResult*> kEmpty;
  for (TaskKind t : tasks) {
    const auto& b = bm.count(t) ? bm.at(t) : kEmpty;
    const auto& c = cm.count(t) ? cm.at(t) : kEmpty;
    const std::string prefix = std::string(ToString(t)) + "/";
    for (const auto& [name, _] : b) {
      if (!c.count(name)) only_b.push_back(prefix + name);
    }
    for (const auto& [name, _] : c) {
      if (!b.count(name)) only_c.push_back(prefix + name);
    }
  }
  if (!only_b.empty() || !only_c.empty()) {
    std::string msg = "compare: dataset sets differ";
    auto list = [&](const char* label, const std::vector<std::string>& keys) {
      if (keys.empty()) return;
      msg += std::string("; only in ") + label + ":";
      for (const std::string& k : keys) msg += " " + k;
    };
    list("baseline", only_b);
    list("challenger", only_c);
    throw DataError(msg);
  }

  for (TaskKind t : tasks) {
    PairedScores ps;
    ComparisonRow row;
    row.task = t;
    for (const auto& [name, br] : bm.at(t)) {
      const EvalResult* cr = cm.at(t).at(name);
      if (!br->score || !cr->score) {
        row.undefined.push_back(name);
        continue;
      }
      ps.datasets.push_back(name);
      ps.baseline.push_back(*br->score);
      ps.challenger.push_back(*cr->score);
    }
    ps.Validate();
    row.n_datasets = ps.datasets.size();
    if (row.n_datasets > 0) {
      const double n = static_cast<double>(row.n_datasets);
      row.baseline_mean = std::accumulate(ps.baseline.begin(), ps.baseline.end(), 0.0) / n;
      row.challenger_mean = std::accumulate(ps.challenger.begin(), ps.challenger.end(), 0.0) / n;
      row.delta = row.challenger_mean - row.baseline_mean;
    }
    if (row.n_datasets < options.min_datasets) {
      row.excluded = true;
      row.test.n_effective = 0;
      row.test.no_information = true;
    } else {
      row.test = WilcoxonSignedRank(ps.baseline, ps.challenger, options.zeros);
      row.significant = row.test.p_value < options.alpha;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string Pad(const std::string& s, std::size_t w, bool left = false) {
  if (s.size() >= w) return s;
  const std::string fill(w - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string RenderReportText(const ComparisonReport& report) {
  constexpr std::size_t kName = 16, kCol = 16;
  std::ostringstream os;
  os << "baseline: " << report.baseline_id << "\n";
  os << "challenger: " << report.challenger_id << "\n\n";
  os << Pad("model", kName, true);
  for (const ComparisonRow& r : report.rows) os << Pad(std::string(ToString(r.task)), kCol);
  os << "\n";
  os << Pad(report.baseline_id, kName, true);
  for (const ComparisonRow& r : report.rows) os << Pad(Fmt("%.4f", r.baseline_mean) + " ", kCol);
  os << "\n";
  os << Pad(report.challenger_id, kName, true);
  for (const ComparisonRow& r : report.rows) {
    os << Pad(Fmt("%+.4f", r.delta) + (r.significant ? "*" : " "), kCol);
  }
  os << "\n\n";
  os << Pad("task", kName, true) << Pad("n", 4) << Pad("W", 10) << Pad("p", 14)
     << Pad("significant", 13) << "  note\n";
  for (const ComparisonRow& r : report.rows) {
    os << Pad(std::string(ToString(r.task)), kName, true) << Pad(std::to_string(r.n_datasets), 4);
    if (r.excluded) {
      os << Pad("-", 10) << Pad("-", 14) << Pad("no", 13) << "  excluded from testing";
    } else {
      os << Pad(Fmt("%.1f", r.test.statistic), 10) << Pad(Fmt("%.7g", r.test.p_value), 14)
         << Pad(r.significant ? "yes" : "no", 13) << "  "
         << (r.test.no_information ? "no information" : (r.test.exact ? "exact" : "normal approx"));
    }
    if (!r.undefined.empty()) {
      os << "; n/a:";
      for (const std::string& d : r.undefined) os << " " << d;
    }
    os << "\n";
  }
  os << "* p < 0.05, two-sided Wilcoxon signed-rank test over per-dataset scores\n";
  return os.str();
}

std::string RenderReportJson(const ComparisonReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ComparisonRow& r : report.rows) {
    nlohmann::json o = {{"task", ToString(r.task)},
                        {"n_datasets", r.n_datasets},
                        {"baseline_mean", r.baseline_mean},
                        {"challenger_mean", r.challenger_mean},
                        {"delta", r.delta},
                        {"excluded", r.excluded},
                        {"significant", r.significant},
                        {"undefined", r.undefined}};
    if (r.excluded) {
      o["W"] = nullptr;
      o["p_value"] = nullptr;
      o["n_effective"] = nullptr;
    } else {
      o["W"] = r.test.statistic;
      o["p_value"] = r.test.p_value;
      o["n_effective"] = r.test.n_effective;
      o["exact"] = r.test.exact;
      o["no_information"] = r.test.no_information;
    }
    rows.push_back(std::move(o));
  }
  nlohmann::json doc = {{"baseline_id", report.baseline_id},
                        {"challenger_id", report.challenger_id},
                        {"rows", rows}};
  return doc.dump(2) + "\n";
}

}  // namespace poolab
