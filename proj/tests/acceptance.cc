// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "poolab/analysis.h"
#include "poolab/cli.h"
#include "poolab/config.h"
#include "poolab/errors.h"
#include "poolab/evaltasks.h"
#include "poolab/io.h"
#include "poolab/pooling.h"
#include "poolab/rng.h"
#include "poolab/stats.h"
#include "poolab/synthetic.h"
#include "poolab/training.h"
#include "poolab/transformer.h"
#include "test_util.h"

namespace poolab {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Collects failed checks for one criterion.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void Near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": got " << got << ", want " << want << " +- " << tol;
    Expect(std::abs(got - want) <= tol, os.str());
  }
  void Note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string Summary() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    if (!s.empty()) return s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string Fixture(const std::string& name) {
  return std::string(POOLAB_SOURCE_DIR) + "/fixtures/results/" + name + ".json";
}

const ComparisonRow& Row(const ComparisonReport& r, TaskKind t) {
  for (const auto& row : r.rows)
    if (row.task == t) return row;
  throw DataError("report has no row for " + std::string(ToString(t)));
}

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void StatisticsReproduction(Checker& c) {
  const auto t0 = Clock::now();
  const auto m1 = ResultsFromJson(ReadFile(Fixture("model1")));
  const auto m2 = ResultsFromJson(ReadFile(Fixture("model2")));
  const auto m3 = ResultsFromJson(ReadFile(Fixture("model3")));
  const ComparisonRow a = Row(CompareModels(m1, m2), TaskKind::kSts);
  c.Near(a.baseline_mean, 0.8302, 1e-4, "model1 STS mean");
  c.Near(a.delta, 0.0129, 1e-4, "model2 STS delta");
  c.Expect(a.test.exact && a.test.p_value == 0.0078125, "model2 STS exact p " + Fmt("%.17g", a.test.p_value));
  c.Expect(a.significant, "model2 STS significant");
  const ComparisonRow b = Row(CompareModels(m1, m3), TaskKind::kSts);
  c.Near(b.delta, 0.0118, 1e-4, "model3 STS delta");
  c.Expect(b.significant, "model3 STS significant");
  const std::string text = RenderReportText(CompareModels(m1, m2));
  c.Expect(text.find("+0.0129*") != std::string::npos, "report marks +0.0129*");
  const double secs = Seconds(t0);
  c.Expect(secs < 1.0, "runtime " + Fmt("%.3f s", secs));
  c.Note("p " + Fmt("%.7g", a.test.p_value) + ", " + Fmt("%.3f s", secs));
}

void FixtureMeans(Checker& c) {
  const auto m1 = ResultsFromJson(ReadFile(Fixture("model1")));
  double sum = 0, sts = 0;
  std::size_t n = 0, ns = 0;
  for (const auto& r : m1) {
    if (r.task == TaskKind::kRetrieval && r.score) sum += *r.score, ++n;
    if (r.task == TaskKind::kSts && r.score) sts += *r.score, ++ns;
  }
  c.Expect(n == 14, "retrieval dataset count " + std::to_string(n));
  c.Near(sum / static_cast<double>(n), 0.5394, 1e-4, "model1 retrieval mean");
  c.Near(sts / static_cast<double>(ns), 0.8302, 1e-4, "model1 STS mean");
  c.Note(Fmt("retrieval mean %.4f", sum / static_cast<double>(n)) + Fmt(", STS mean %.4f", sts / static_cast<double>(ns)));
}

// All 2^n sign assignments of the observed ranks.
double EnumeratedP(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> mags;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(y[i] - x[i]) > 1e-12) mags.push_back(std::abs(y[i] - x[i]));
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
  double total = 0, plus = 0;
  for (std::size_t i = 0, k = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    if (std::abs(d) <= 1e-12) continue;
    if (d > 0) plus += ranks[k];
    total += ranks[k++];
  }
  const double observed = std::min(plus, total - plus);
  std::uint64_t extreme = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += ranks[i];
    extreme += std::min(s, total - s) <= observed + 1e-9;
  }
  return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(std::uint64_t{1} << n));
}

void WilcoxonExactness(Checker& c) {
  std::size_t cases = 0, ties = 0, zeros = 0;
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed * 131 + n);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (seed % 2 == 0) {
          x[i] = static_cast<double>(rng.Int(0, 4));
          y[i] = static_cast<double>(rng.Int(0, 4));
        } else {
          x[i] = rng.Normal();
          y[i] = rng.Normal();
        }
      }
      const WilcoxonResult r = WilcoxonSignedRank(x, y);
      const double want = EnumeratedP(x, y);
      ++cases;
      bool has_zero = false;
      for (std::size_t i = 0; i < n; ++i) has_zero |= x[i] == y[i];
      zeros += has_zero;
      ties += seed % 2 == 0;
      if (r.p_value != want) {
        c.Expect(false, "n " + std::to_string(n) + " seed " + std::to_string(seed) + ": p " +
                            Fmt("%.17g", r.p_value) + " vs " + Fmt("%.17g", want));
      }
    }
  }
  c.Note(std::to_string(cases) + " samples, " + std::to_string(zeros) + " with zeros, " +
         std::to_string(ties) + " tie-heavy");
}

struct PoolerSetup {
  PoolerParams params;
  std::size_t dim = 6;
};

PoolerSetup RandomPooler(std::uint64_t seed, PoolingKind kind) {
  ModelConfig m;
  m.n_layers = 3;
  m.hidden_dim = 6;
  m.n_heads = 2;
  PoolingConfig pc;
  pc.kind = kind;
  pc.latents = 2;
  pc.inner_dim = 4;
  pc.heads = 2;
  pc.out_dim = 4;
  Rng rng(seed);
  PoolerSetup s{PoolerParams::Init(pc, m, rng)};
  s.params.layer_weights.mutable_value() = rng.NormalArray({3, 6}, 0.5);
  s.params.latent_queries.mutable_value() = rng.NormalArray({2, 4}, 1.0);
  s.params.mlp_b1.mutable_value() = rng.NormalArray({s.params.mlp_b1.value().size()}, 0.3);
  s.params.mlp_b2.mutable_value() = rng.NormalArray({4}, 0.3);
  return s;
}

void GradientIntegrity(Checker& c) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (TrainableMode mode : {TrainableMode::kLastLayer, TrainableMode::kMultiLayer}) {
      const PoolingKind kind = mode == TrainableMode::kLastLayer ? PoolingKind::kLastLayerTrainable
                                                                 : PoolingKind::kMultiLayerTrainable;
      const PoolerSetup s = RandomPooler(seed, kind);
      Rng rng(1000 + seed);
      Var x = Var::Parameter(rng.NormalArray({2 * 3, 6}, 1.0));
      const Var r = Var::Constant(rng.NormalArray({2, 4}, 1.0));
      const std::vector<std::uint8_t> keep =
          mode == TrainableMode::kLastLayer ? std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0}
                                            : std::vector<std::uint8_t>{};
      auto loss = [&] {
        return ops::Sum(ops::Mul(PoolTrainableBatch(x, 2, 3, keep, s.params, mode), r));
      };
      auto params = s.params.Named();
      if (mode == TrainableMode::kLastLayer) {
        std::erase_if(params, [](const auto& p) { return p.first.find("layer_weights") != std::string::npos; });
      }
      params.emplace_back("input", x);
      for (const auto& g : testing::CheckGradients(loss, params, 1e-5)) {
        worst = std::max(worst, g.rel_error);
        c.Expect(g.rel_error < 1e-4, std::string(ToString(kind)) + " " + g.name + " seed " +
                                         std::to_string(seed) + Fmt(" rel %.3g", g.rel_error));
      }
    }
    Rng rng(2000 + seed);
    Var q = Var::Parameter(rng.NormalArray({4, 6}, 1.0));
    Var k = Var::Parameter(rng.NormalArray({8, 6}, 1.0));
    const std::vector<std::size_t> pos{0, 1, 2, 3};
    auto loss = [&] { return InfoNceLoss(ops::L2NormalizeRows(q), ops::L2NormalizeRows(k), pos, 0.05); };
    for (const auto& g : testing::CheckGradients(loss, {{"queries", q}, {"candidates", k}}, 1e-5)) {
      worst = std::max(worst, g.rel_error);
      c.Expect(g.rel_error < 1e-4, "infonce " + g.name + " seed " + std::to_string(seed));
    }
  }
  const double secs = Seconds(t0);
  c.Expect(secs < 120.0, "runtime " + Fmt("%.1f s", secs));
  c.Note(Fmt("max rel error %.3g", worst) + ", " + Fmt("%.2f s", secs));
}

ModelConfig SmallBackbone(AttentionMode mode) {
  ModelConfig m;
  m.n_layers = 3;
  m.hidden_dim = 16;
  m.n_heads = 2;
  m.ffn_dim = 32;
  m.vocab_size = 101;
  m.max_seq_len = 12;
  m.attention = mode;
  return m;
}

NdArray Permuted(const NdArray& x, const std::vector<std::size_t>& perm) {
  NdArray y(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < x.shape()[1]; ++j) y.at(i, j) = x.at(perm[i], j);
  return y;
}

void ArchitecturalInvariants(Checker& c) {
  double prefix = 0.0;
  const ModelConfig causal = SmallBackbone(AttentionMode::kCausal);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const BackboneParams p = BackboneParams::Init(causal, rng);
    std::vector<std::size_t> a{5, 17, 3, 88, 41, 9, 100}, b = a;
    b[4] = 2;
    b[5] = 77;
    const std::vector<TokenSequence> batch{{a}, {b}};
    const HiddenStates h = Forward(batch, causal, p);
    for (std::size_t l = 0; l < causal.n_layers; ++l)
      for (std::size_t t = 0; t < 4; ++t) {
        const auto x = h.State(l, 0, t), y = h.State(l, 1, t);
        for (std::size_t j = 0; j < causal.hidden_dim; ++j) prefix = std::max(prefix, std::abs(x[j] - y[j]));
      }
  }
  c.Expect(prefix <= 1e-10, Fmt("causal prefix difference %.3g", prefix));

  const ModelConfig bidir = SmallBackbone(AttentionMode::kBidirectional);
  int sees_future = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const BackboneParams p = BackboneParams::Init(bidir, rng);
    const std::vector<TokenSequence> batch{{{5, 17, 3, 88}}, {{5, 17, 3, 42}}};
    const HiddenStates h = Forward(batch, bidir, p);
    const auto x = h.State(bidir.n_layers - 1, 0, 0), y = h.State(bidir.n_layers - 1, 1, 0);
    double d = 0;
    for (std::size_t j = 0; j < bidir.hidden_dim; ++j) d = std::max(d, std::abs(x[j] - y[j]));
    sees_future += d > 1e-6;
  }
  c.Expect(sees_future >= 9, "bidirectional sensitivity " + std::to_string(sees_future) + "/10");

  double equiv = 0.0, invariant = 0.0;
  int sensitive = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PoolerSetup s = RandomPooler(seed, PoolingKind::kMultiLayerTrainable);
    Rng rng(500 + seed);
    PoolerParams one = s.params;
    one.layer_weights = Var::Parameter(NdArray({1, 6}));
    const NdArray single = rng.NormalArray({1, 6}, 1.0);
    equiv = std::max(equiv, MaxAbsDiff(PoolTrainable(single, one, TrainableMode::kMultiLayer).vector,
                                       PoolTrainable(single, one, TrainableMode::kLastLayer).vector));

    const NdArray x = rng.NormalArray({3, 6}, 1.0);
    const std::vector<std::size_t> perm{2, 0, 1};
    PoolerParams flat = s.params;
    flat.layer_weights = Var::Parameter(NdArray({3, 6}));
    invariant = std::max(invariant, MaxAbsDiff(PoolTrainable(x, flat, TrainableMode::kMultiLayer).vector,
                                               PoolTrainable(Permuted(x, perm), flat, TrainableMode::kMultiLayer).vector));
    NdArray same({3, 6});
    const NdArray row = rng.NormalArray({1, 6}, 0.5);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 6; ++j) same.at(i, j) = row.at(0, j);
    flat.layer_weights = Var::Parameter(same);
    invariant = std::max(invariant, MaxAbsDiff(PoolTrainable(x, flat, TrainableMode::kMultiLayer).vector,
                                               PoolTrainable(Permuted(x, perm), flat, TrainableMode::kMultiLayer).vector));

    const NdArray before = PoolTrainable(x, s.params, TrainableMode::kMultiLayer).vector;
    const NdArray after = PoolTrainable(Permuted(x, perm), s.params, TrainableMode::kMultiLayer).vector;
    sensitive += MaxAbsDiff(before, after) > 1e-8;
  }
  c.Expect(equiv <= 1e-12, Fmt("MultiLayer(l=1, W=0) vs LastLayer %.3g", equiv));
  c.Expect(invariant <= 1e-12, Fmt("permutation invariance %.3g", invariant));
  c.Expect(sensitive >= 9, "layer-weight sensitivity " + std::to_string(sensitive) + "/10");
  c.Note(Fmt("prefix %.2g", prefix) + ", future " + std::to_string(sees_future) + "/10, " +
         Fmt("l=1 %.2g", equiv) + ", " + Fmt("perm %.2g", invariant) + ", weights " +
         std::to_string(sensitive) + "/10");
}

double OracleSpearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double below = 0, equal = 0;
      for (double w : v) below += w < v[i], equal += w == v[i];
      r[i] = below + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void MetricOracles(Checker& c) {
  c.Near(NdcgAtK(std::vector<std::string>{"d2", "d1", "d3"}, Qrels{{"d1", 1.0}}), 1.0 / std::log2(3.0), 1e-9,
         "NDCG@10 rank-2");
  const std::vector<double> x{1, 2, 3, 4, 5}, up{2, 4, 8, 16, 32}, down{5, 4, 3, 2, 1};
  c.Near(*Spearman(x, up), 1.0, 1e-12, "Spearman monotone");
  c.Near(*Spearman(x, down), -1.0, 1e-12, "Spearman reversed");
  const std::vector<double> a{1, 2, 2, 4}, b{1, 3, 2, 4};
  c.Near(*Spearman(a, b), OracleSpearman(a, b), 1e-9, "Spearman ties");
  const std::vector<int> g{0, 0, 1, 1}, perm{1, 1, 0, 0}, one{0, 0, 0, 0};
  c.Expect(VMeasure(g, perm).v_measure == 1.0, "V-measure relabeled partition");
  c.Expect(VMeasure(g, one).v_measure == 0.0, "V-measure single cluster");
  const std::vector<int> gold{0, 0, 0, 1, 1, 1}, pred{0, 0, 1, 1, 2, 2};
  const double h = 2.0 / 3.0;
  const double comp = 1.0 - (std::log(3.0) - 2.0 / 3.0 * std::log(2.0)) / std::log(3.0);
  c.Near(VMeasure(gold, pred).v_measure, 2 * h * comp / (h + comp), 1e-9, "V-measure hand case");
  c.Note("NDCG, Spearman and V-measure cases match");
}

int Cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "poolab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, e);
  if (err) *err = e.str();
  return code;
}

std::optional<double> ScoreFor(const std::vector<EvalResult>& rs, TaskKind t, const std::string& dataset) {
  for (const auto& r : rs)
    if (r.task == t && r.dataset == dataset) return r.score;
  return std::nullopt;
}

void EndToEndTraining(Checker& c) {
  const fs::path dir = fs::temp_directory_path() / "poolab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto at = [&](const std::string& s) { return (dir / s).string(); };
  std::string err;
  c.Expect(Cli({"gen-synthetic", "--out", at("synth"), "--clusters", "8", "--size", "2000", "--seed", "0"}, &err) == 0,
           "gen-synthetic: " + err);
  const std::vector<std::pair<TaskKind, std::string>> suite{{TaskKind::kSts, "sts"},
                                                            {TaskKind::kSts, "sts-near"},
                                                            {TaskKind::kRetrieval, "retrieval"},
                                                            {TaskKind::kClassification, "classification"},
                                                            {TaskKind::kClustering, "clustering"}};
  for (const std::string model : {"model1", "model5"}) {
    const auto t0 = Clock::now();
    const int code = Cli({"train", "--config", std::string(POOLAB_SOURCE_DIR) + "/configs/" + model + ".json",
                          "--data", at("synth"), "--out", at(model + ".ckpt")},
                         &err);
    const double secs = Seconds(t0);
    c.Expect(code == 0, model + " train: " + err);
    c.Expect(secs < 600.0, model + Fmt(" train time %.0f s", secs));
    for (const auto& [task, name] : suite) {
      c.Expect(Cli({"eval", "--ckpt", at(model + ".ckpt"), "--task", std::string(ToString(task)), "--data",
                    at("synth/eval/" + name), "--out", at(model + ".json"), "--model-id", model},
                   &err) == 0,
               model + " eval " + name + ": " + err);
    }
    const auto rs = ResultsFromJson(ReadFile(at(model + ".json")));
    const auto ndcg = ScoreFor(rs, TaskKind::kRetrieval, "retrieval");
    const auto sts = ScoreFor(rs, TaskKind::kSts, "sts");
    c.Expect(ndcg && *ndcg >= 0.9, model + Fmt(" NDCG@10 %.4f", ndcg.value_or(NAN)));
    c.Expect(sts && *sts >= 0.8, model + Fmt(" STS %.4f", sts.value_or(NAN)));
    c.Note(model + Fmt(" ndcg %.4f", ndcg.value_or(NAN)) + Fmt(" sts %.4f", sts.value_or(NAN)) +
           Fmt(" (%.0f s)", secs));
  }

  const RunConfig cfg = RunConfig::FromPreset("model1");
  const EncoderModel untrained = EncoderModel::Init(cfg.model, cfg.pooling, cfg.train.seed);
  const SyntheticSuite s = GenerateSynthetic({8, 2000, 0});
  const EmbedFn embed = ModelEmbedder(untrained);
  const auto ndcg = EvalRetrieval(embed, s.retrieval, {"untrained", "retrieval", 0}).score;
  const auto sts = EvalSts(embed, s.sts, {"untrained", "sts", 0}).score;
  c.Expect(ndcg && *ndcg <= 0.3, Fmt("untrained NDCG@10 %.4f", ndcg.value_or(NAN)));
  c.Expect(sts && std::abs(*sts) <= 0.15, Fmt("untrained STS %.4f", sts.value_or(NAN)));
  c.Note(Fmt("untrained model1 ndcg %.4f", ndcg.value_or(NAN)) + Fmt(" sts %.4f", sts.value_or(NAN)));

  c.Expect(Cli({"compare", "--baseline", at("model1.json"), "--challenger", at("model5.json"), "--out",
                at("report")},
               &err) == 0,
           "compare: " + err);
  c.Expect(fs::exists(at("report.txt")) && fs::exists(at("report.json")), "report files written");
  fs::remove_all(dir);
}

HiddenStateDump Dump(std::uint32_t l, std::uint32_t n, std::uint32_t d, Rng& rng) {
  HiddenStateDump h;
  h.n_layers = l;
  h.n_items = n;
  h.dim = d;
  h.values.resize(static_cast<std::size_t>(l) * n * d);
  for (float& v : h.values) v = static_cast<float>(rng.Normal());
  return h;
}

void AnalysisPipeline(Checker& c) {
  Rng rng(42);
  HiddenStateDump same = Dump(5, 7, 16, rng);
  const std::size_t per_layer = static_cast<std::size_t>(same.n_items) * same.dim;
  for (std::size_t l = 1; l < 5; ++l)
    std::copy_n(same.values.begin(), per_layer, same.values.begin() + static_cast<std::ptrdiff_t>(l * per_layer));
  const LayerCorrelationMatrix ones = LayerCorrelation(same);
  double off = 0;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) off = std::max(off, std::abs(*ones.at(a, b) - 1.0));
  c.Expect(off <= 1e-12, Fmt("identical layers deviation %.3g", off));

  const std::size_t pairs = 60, dim = 8, layers = 4;
  for (std::size_t planted = 0; planted < layers; ++planted) {
    HiddenStateDump h = Dump(layers, pairs * 2, dim, rng);
    std::vector<double> gold;
    for (std::size_t p = 0; p < pairs; ++p) {
      const double g = static_cast<double>(p % 6);
      gold.push_back(g);
      const double theta = (1.0 - g / 5.0) * 1.5;
      float* u = &h.values[(planted * h.n_items + 2 * p) * dim];
      float* v = u + dim;
      for (std::size_t k = 0; k < dim; ++k) u[k] = v[k] = 0.01f * static_cast<float>(k);
      u[0] = 1.0f;
      u[1] = 0.0f;
      v[0] = static_cast<float>(std::cos(theta));
      v[1] = static_cast<float>(std::sin(theta));
    }
    const LayerSeries s = PerLayerSts(h, gold);
    c.Expect(s.argmax == planted, "planted layer " + std::to_string(planted) + " argmax " +
                                      (s.argmax ? std::to_string(*s.argmax) : std::string("none")));
  }

  double asym = 0, diag = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const LayerCorrelationMatrix m = LayerCorrelation(Dump(6, 5, 12, r));
    for (std::size_t a = 0; a < 6; ++a) {
      diag = std::max(diag, std::abs(*m.at(a, a) - 1.0));
      for (std::size_t b = 0; b < 6; ++b) asym = std::max(asym, std::abs(*m.at(a, b) - *m.at(b, a)));
    }
  }
  c.Expect(asym <= 1e-12, Fmt("asymmetry %.3g", asym));
  c.Expect(diag <= 1e-12, Fmt("diagonal deviation %.3g", diag));
  c.Note(Fmt("all-ones deviation %.2g", off) + ", planted layers found, " + Fmt("asymmetry %.2g", asym));
}

}  // namespace
}  // namespace poolab

int main() {
  using poolab::Checker;
  const std::vector<std::pair<const char*, std::function<void(Checker&)>>> criteria{
      {"1 statistics reproduction", poolab::StatisticsReproduction},
      {"2 fixture mean consistency", poolab::FixtureMeans},
      {"3 wilcoxon exactness", poolab::WilcoxonExactness},
      {"4 gradient integrity", poolab::GradientIntegrity},
      {"5 architectural invariants", poolab::ArchitecturalInvariants},
      {"6 metric oracles", poolab::MetricOracles},
      {"7 end-to-end training sanity", poolab::EndToEndTraining},
      {"8 analysis pipeline", poolab::AnalysisPipeline},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Checker c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.Expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok();
    std::printf("%s criterion %s: %s\n", c.ok() ? "PASS" : "FAIL", name, c.Summary().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
