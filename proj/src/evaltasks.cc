// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/evaltasks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"
#include "poolab/errors.h"
#include "poolab/rng.h"
#include "poolab/training.h"

namespace poolab {

using nlohmann::json;

std::string_view ToString(TaskKind t) {
  switch (t) {
    case TaskKind::kSts: return "STS";
    case TaskKind::kRetrieval: return "Retrieval";
    case TaskKind::kClassification: return "Classification";
    case TaskKind::kClustering: return "Clustering";
  }
  return "?";
}

std::string_view ToString(Metric m) {
  switch (m) {
    case Metric::kSpearmanCosine: return "SpearmanCosine";
    case Metric::kNdcgAt10: return "NDCG@10";
    case Metric::kAccuracy: return "Accuracy";
    case Metric::kVMeasure: return "VMeasure";
  }
  return "?";
}

TaskKind ParseTaskKind(std::string_view s) {
  if (s == "STS" || s == "sts") return TaskKind::kSts;
  if (s == "Retrieval" || s == "retrieval") return TaskKind::kRetrieval;
  if (s == "Classification" || s == "classification") return TaskKind::kClassification;
  if (s == "Clustering" || s == "clustering") return TaskKind::kClustering;
  throw ConfigError("task: unknown task '" + std::string(s) +
                    "' (expected sts, retrieval, classification or clustering)");
}

Metric ParseMetric(std::string_view s) {
  for (Metric m : {Metric::kSpearmanCosine, Metric::kNdcgAt10, Metric::kAccuracy,
                   Metric::kVMeasure}) {
    if (ToString(m) == s) return m;
  }
  throw DataError("metric: unknown metric '" + std::string(s) + "'");
}

Metric MetricFor(TaskKind t) {
  switch (t) {
    case TaskKind::kSts: return Metric::kSpearmanCosine;
    case TaskKind::kRetrieval: return Metric::kNdcgAt10;
    case TaskKind::kClassification: return Metric::kAccuracy;
    case TaskKind::kClustering: return Metric::kVMeasure;
  }
  return Metric::kSpearmanCosine;
}

std::string ResultsToJson(std::span<const EvalResult> results) {
  json arr = json::array();
  for (const EvalResult& r : results) {
    json o = {{"model_id", r.model_id},
              {"task", ToString(r.task)},
              {"dataset", r.dataset},
              {"metric", ToString(r.metric)},
              {"score", r.score ? json(*r.score) : json(nullptr)}};
    if (!r.extras.empty()) {
      json ex = json::object();
      for (const auto& [k, v] : r.extras) ex[k] = v;
      o["extras"] = ex;
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<EvalResult> ResultsFromJson(std::string_view text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("results: invalid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw DataError("results: top level must be an array");
  std::vector<EvalResult> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& o = arr[i];
    const std::string where = "results[" + std::to_string(i) + "]";
    if (!o.is_object()) throw DataError(where + ": not an object");
    for (const auto& [key, _] : o.items()) {
      if (key != "model_id" && key != "task" && key != "dataset" && key != "metric" &&
          key != "score" && key != "extras") {
        throw DataError(where + ": unknown key '" + key + "'");
      }
    }
    auto str = [&](const char* key) {
      if (!o.contains(key) || !o[key].is_string()) {
        throw DataError(where + "." + key + ": missing or not a string");
      }
      return o[key].get<std::string>();
    };
    EvalResult r;
    r.model_id = str("model_id");
    try {
      r.task = ParseTaskKind(str("task"));
    } catch (const ConfigError& e) {
      throw DataError(where + ".task: " + e.what());
    }
    r.dataset = str("dataset");
    r.metric = ParseMetric(str("metric"));
    if (r.metric != MetricFor(r.task)) {
      throw DataError(where + ".metric: " + std::string(ToString(r.metric)) +
                      " does not match task " + std::string(ToString(r.task)));
    }
    if (!o.contains("score")) throw DataError(where + ".score: missing");
    if (o["score"].is_number()) {
      const double s = o["score"].get<double>();
      const double lo = r.metric == Metric::kSpearmanCosine ? -1.0 : 0.0;
      if (!(s >= lo - 1e-12 && s <= 1.0 + 1e-12)) {
        throw DataError(where + ".score: out of range");
      }
      r.score = s;
    } else if (!o["score"].is_null()) {
      throw DataError(where + ".score: must be a number or null");
    }
    if (o.contains("extras")) {
      if (!o["extras"].is_object()) throw DataError(where + ".extras: must be an object");
      for (const auto& [k, v] : o["extras"].items()) {
        if (!v.is_number()) throw DataError(where + ".extras." + k + ": must be a number");
        r.extras.emplace_back(k, v.get<double>());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- metrics ---------------------------------------------------------------

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("spearman: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) throw ContractError("spearman: need at least 2 observations");
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  const double r = Pearson(rx, ry);
  if (std::isnan(r)) return std::nullopt;
  return r;
}

double NdcgAtK(std::span<const std::string> ranked, const Qrels& qrels, std::size_t k) {
  std::set<std::string_view> seen;
  for (const std::string& id : ranked) {
    if (!seen.insert(id).second) throw ContractError("ndcg: duplicate doc id '" + id + "'");
  }
  std::vector<double> grades;
  for (const auto& [_, g] : qrels) {
    if (g > 0.0) grades.push_back(g);
  }
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    idcg += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    auto it = qrels.find(ranked[i]);
    if (it == qrels.end() || it->second <= 0.0) continue;
    dcg += (std::exp2(it->second) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

namespace {

double Entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

std::vector<int> Compact(std::span<const int> labels, std::size_t* n_distinct) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, _] = ids.emplace(l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  *n_distinct = ids.size();
  return out;
}

}  // namespace

VMeasureScore VMeasure(std::span<const int> gold, std::span<const int> predicted) {
  if (gold.size() != predicted.size()) throw DimensionError("v_measure: length mismatch");
  if (gold.empty()) throw ContractError("v_measure: no points");
  std::size_t nc = 0, nk = 0;
  const std::vector<int> c = Compact(gold, &nc);
  const std::vector<int> k = Compact(predicted, &nk);
  const double n = static_cast<double>(gold.size());
  std::vector<double> table(nc * nk, 0.0), cc(nc, 0.0), kc(nk, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    table[c[i] * nk + k[i]] += 1.0;
    cc[c[i]] += 1.0;
    kc[k[i]] += 1.0;
  }
  const double hc = Entropy(cc, n), hk = Entropy(kc, n);
  double hc_given_k = 0.0, hk_given_c = 0.0;
  for (std::size_t a = 0; a < nc; ++a) {
    for (std::size_t b = 0; b < nk; ++b) {
      const double v = table[a * nk + b];
      if (v == 0.0) continue;
      hc_given_k -= (v / n) * std::log(v / kc[b]);
      hk_given_c -= (v / n) * std::log(v / cc[a]);
    }
  }
  VMeasureScore s;
  s.homogeneity = hc == 0.0 ? 1.0 : 1.0 - hc_given_k / hc;
  s.completeness = hk == 0.0 ? 1.0 : 1.0 - hk_given_c / hk;
  const double denom = s.homogeneity + s.completeness;
  s.v_measure = denom == 0.0 ? 0.0 : 2.0 * s.homogeneity * s.completeness / denom;
  return s;
}

namespace {

double SqDist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

KMeansResult KMeansOnce(const NdArray& x, std::size_t k, Rng& rng, std::size_t max_iter) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  NdArray cent({k, d});
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.Index(n);
  std::copy_n(x.row(first).data(), d, cent.row(0).data());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SqDist(x.row(i), cent.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.Uniform(0.0, total);
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    } else {
      pick = rng.Index(n);
    }
    std::copy_n(x.row(pick).data(), d, cent.row(c).data());
  }

  std::vector<int> labels(n, -1);
  std::vector<double> dist(n, 0.0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = SqDist(x.row(i), cent.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = SqDist(x.row(i), cent.row(c));
        if (dc < bd) {
          bd = dc;
          best = static_cast<int>(c);
        }
      }
      dist[i] = bd;
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> count(k, 0.0);
    cent.Fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      count[labels[i]] += 1.0;
      auto row = cent.row(labels[i]);
      auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += xi[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0.0) {
        for (double& v : cent.row(c)) v /= count[c];
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid.
      const std::size_t far = static_cast<std::size_t>(
          std::max_element(dist.begin(), dist.end()) - dist.begin());
      std::copy_n(x.row(far).data(), d, cent.row(c).data());
      dist[far] = 0.0;
    }
  }
  KMeansResult r;
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double bd = SqDist(x.row(i), cent.row(0));
    for (std::size_t c = 1; c < k; ++c) {
      const double dc = SqDist(x.row(i), cent.row(c));
      if (dc < bd) {
        bd = dc;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
    r.inertia += bd;
  }
  r.labels = std::move(labels);
  r.centroids = std::move(cent);
  return r;
}

}  // namespace

KMeansResult KMeans(const NdArray& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts, std::size_t max_iter) {
  if (points.rank() != 2) throw DimensionError("kmeans: points must be 2-D");
  if (k == 0 || points.dim(0) < k) {
    throw DataError("kmeans: " + std::to_string(points.dim(0)) + " points for k = " +
                    std::to_string(k));
  }
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    KMeansResult cur = KMeansOnce(points, k, rng, max_iter);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

std::vector<int> LinearProbe::Predict(const NdArray& x) const {
  const NdArray logits = MatMul(x, weights);
  std::vector<int> out(x.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = logits.row(i);
    int best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] + bias[c] > row[best] + bias[best]) best = static_cast<int>(c);
    }
    out[i] = best;
  }
  return out;
}

LinearProbe FitLinearProbe(const NdArray& x, std::span<const int> labels, std::size_t n_classes,
                           std::uint64_t seed, std::size_t epochs, double learning_rate,
                           std::size_t batch_size) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (labels.size() != n) throw DimensionError("linear probe: one label per row required");
  LinearProbe probe{NdArray({d, n_classes}), std::vector<double>(n_classes, 0.0)};
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> p(n_classes);
  NdArray gw({d, n_classes});
  std::vector<double> gb(n_classes);
  for (std::size_t ep = 0; ep < epochs; ++ep) {
    rng.Shuffle(order.begin(), order.end());
    for (std::size_t lo = 0; lo < n; lo += batch_size) {
      const std::size_t hi = std::min(n, lo + batch_size);
      gw.Fill(0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t t = lo; t < hi; ++t) {
        const std::size_t i = order[t];
        auto xi = x.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_classes; ++c) {
          double z = probe.bias[c];
          for (std::size_t j = 0; j < d; ++j) z += xi[j] * probe.weights.at(j, c);
          p[c] = z;
          mx = std::max(mx, z);
        }
        double s = 0.0;
        for (double& v : p) s += (v = std::exp(v - mx));
        for (std::size_t c = 0; c < n_classes; ++c) {
          const double g = p[c] / s - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0);
          gb[c] += g;
          for (std::size_t j = 0; j < d; ++j) gw.at(j, c) += g * xi[j];
        }
      }
      const double scale = learning_rate / static_cast<double>(hi - lo);
      for (std::size_t j = 0; j < gw.size(); ++j) probe.weights[j] -= scale * gw[j];
      for (std::size_t c = 0; c < n_classes; ++c) probe.bias[c] -= scale * gb[c];
    }
  }
  return probe;
}

// ---- datasets --------------------------------------------------------------

void RetrievalDataset::Validate() const {
  std::set<std::string> docs, qs;
  for (const IdText& d : corpus) {
    if (!docs.insert(d.id).second) throw DataError("retrieval: duplicate corpus id '" + d.id + "'");
  }
  for (const IdText& q : queries) {
    if (!qs.insert(q.id).second) throw DataError("retrieval: duplicate query id '" + q.id + "'");
  }
  for (const auto& [qid, judged] : qrels) {
    if (!qs.count(qid)) throw DataError("retrieval: qrels query id '" + qid + "' not in queries");
    for (const auto& [did, grade] : judged) {
      if (!docs.count(did)) throw DataError("retrieval: qrels doc id '" + did + "' not in corpus");
      if (!(grade >= 0.0)) throw DataError("retrieval: negative grade for '" + qid + "'");
    }
  }
}

// ---- task drivers ----------------------------------------------------------

EmbedFn ModelEmbedder(const EncoderModel& model, std::size_t chunk) {
  return [&model, chunk](std::span<const std::string> texts) {
    return Encode(model, texts, chunk);
  };
}

namespace {

std::vector<std::string> WithInstruction(std::span<const std::string> texts,
                                         std::string_view instruction) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(FormatQuery(instruction, t));
  return out;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

EvalResult MakeResult(const EvalContext& ctx, TaskKind task, std::optional<double> score) {
  EvalResult r;
  r.model_id = ctx.model_id;
  r.task = task;
  r.dataset = ctx.dataset;
  r.metric = MetricFor(task);
  r.score = score;
  return r;
}

std::vector<int> EncodeLabels(const LabeledDataset& data, const std::map<std::string, int>& ids) {
  std::vector<int> out;
  for (const LabeledText& t : data.items) out.push_back(ids.at(t.label));
  return out;
}

std::vector<std::string> Texts(const LabeledDataset& data) {
  std::vector<std::string> out;
  for (const LabeledText& t : data.items) out.push_back(t.text);
  return out;
}

}  // namespace

std::optional<double> StsScore(const NdArray& emb1, const NdArray& emb2,
                               std::span<const double> gold) {
  if (emb1.shape() != emb2.shape() || emb1.dim(0) != gold.size()) {
    throw DimensionError("sts: embedding rows must match the number of pairs");
  }
  std::vector<double> cos(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) cos[i] = Cosine(emb1.row(i), emb2.row(i));
  return Spearman(cos, gold);
}

EvalResult EvalSts(const EmbedFn& embed, const StsDataset& data, const EvalContext& ctx,
                   std::string_view instruction) {
  if (data.pairs.size() < 2) throw DataError("sts: need at least 2 pairs");
  std::vector<std::string> s1, s2;
  std::vector<double> gold;
  for (const StsPair& p : data.pairs) {
    s1.push_back(p.sentence1);
    s2.push_back(p.sentence2);
    gold.push_back(p.score);
  }
  const NdArray e1 = embed(WithInstruction(s1, instruction));
  const NdArray e2 = embed(WithInstruction(s2, instruction));
  return MakeResult(ctx, TaskKind::kSts, StsScore(e1, e2, gold));
}

std::optional<double> RetrievalScore(const NdArray& query_emb, const NdArray& corpus_emb,
                                     const RetrievalDataset& data) {
  if (query_emb.dim(0) != data.queries.size() || corpus_emb.dim(0) != data.corpus.size()) {
    throw DimensionError("retrieval: embedding rows must match queries and corpus");
  }
  const std::size_t nd = data.corpus.size();
  std::vector<double> norms(nd);
  for (std::size_t j = 0; j < nd; ++j) {
    double s = 0.0;
    for (double v : corpus_emb.row(j)) s += v * v;
    norms[j] = std::sqrt(s);
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> scores(nd);
  std::vector<std::size_t> order(nd);
  for (std::size_t q = 0; q < data.queries.size(); ++q) {
    auto it = data.qrels.find(data.queries[q].id);
    if (it == data.qrels.end()) continue;
    const bool any_relevant = std::any_of(it->second.begin(), it->second.end(),
                                          [](const auto& kv) { return kv.second > 0.0; });
    if (!any_relevant) continue;
    auto qv = query_emb.row(q);
    double qn = 0.0;
    for (double v : qv) qn += v * v;
    qn = std::sqrt(qn);
    for (std::size_t j = 0; j < nd; ++j) {
      double dot = 0.0;
      auto dv = corpus_emb.row(j);
      for (std::size_t t = 0; t < dv.size(); ++t) dot += qv[t] * dv[t];
      scores[j] = (qn == 0.0 || norms[j] == 0.0) ? 0.0 : dot / (qn * norms[j]);
    }
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min<std::size_t>(10, nd);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::string> ranked;
    for (std::size_t r = 0; r < top; ++r) ranked.push_back(data.corpus[order[r]].id);
    total += NdcgAtK(ranked, it->second, 10);
    ++counted;
  }
  if (counted == 0) return std::nullopt;
  return total / static_cast<double>(counted);
}

EvalResult EvalRetrieval(const EmbedFn& embed, const RetrievalDataset& data,
                         const EvalContext& ctx, std::string_view instruction) {
  data.Validate();
  std::vector<std::string> qt, dt;
  for (const IdText& q : data.queries) qt.push_back(q.text);
  for (const IdText& d : data.corpus) dt.push_back(d.text);
  const NdArray qe = embed(WithInstruction(qt, instruction));
  const NdArray de = embed(dt);
  return MakeResult(ctx, TaskKind::kRetrieval, RetrievalScore(qe, de, data));
}

EvalResult EvalClassification(const EmbedFn& embed, const LabeledDataset& train,
                              const LabeledDataset& test, const EvalContext& ctx) {
  std::set<std::string> train_labels, test_labels;
  for (const LabeledText& t : train.items) train_labels.insert(t.label);
  for (const LabeledText& t : test.items) test_labels.insert(t.label);
  if (train_labels.size() < 2) throw DataError("classification: need at least 2 classes");
  for (const std::string& l : test_labels) {
    if (!train_labels.count(l)) {
      throw DataError("classification: class '" + l + "' missing from train split");
    }
  }
  for (const std::string& l : train_labels) {
    if (!test_labels.count(l)) {
      throw DataError("classification: class '" + l + "' missing from test split");
    }
  }
  std::map<std::string, int> ids;
  for (const std::string& l : train_labels) ids.emplace(l, static_cast<int>(ids.size()));
  const std::vector<int> ytr = EncodeLabels(train, ids), yte = EncodeLabels(test, ids);
  const NdArray xtr = embed(Texts(train));
  const NdArray xte = embed(Texts(test));
  const LinearProbe probe = FitLinearProbe(xtr, ytr, ids.size(), ctx.seed);
  const std::vector<int> pred = probe.Predict(xte);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == yte[i];

  std::vector<std::size_t> counts(ids.size(), 0);
  for (int y : ytr) ++counts[y];
  const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const double baseline =
      static_cast<double>(std::count(yte.begin(), yte.end(), majority)) / static_cast<double>(yte.size());

  EvalResult r = MakeResult(ctx, TaskKind::kClassification,
                            static_cast<double>(correct) / static_cast<double>(pred.size()));
  r.extras.emplace_back("majority_baseline", baseline);
  return r;
}

EvalResult EvalClustering(const EmbedFn& embed, const LabeledDataset& data,
                          const EvalContext& ctx) {
  std::map<std::string, int> ids;
  for (const LabeledText& t : data.items) ids.emplace(t.label, 0);
  if (ids.size() < 2) throw DataError("clustering: need at least 2 gold classes");
  if (data.items.size() < ids.size()) throw DataError("clustering: fewer points than classes");
  int next = 0;
  for (auto& [_, v] : ids) v = next++;
  const std::vector<int> gold = EncodeLabels(data, ids);
  const NdArray x = embed(Texts(data));
  const KMeansResult km = KMeans(x, ids.size(), ctx.seed);
  return MakeResult(ctx, TaskKind::kClustering, VMeasure(gold, km.labels).v_measure);
}

}  // namespace poolab
