// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/cli.h"

#include <algorithm>
#include <filesystem>
#include <future>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "poolab/analysis.h"
#include "poolab/checkpoint.h"
#include "poolab/config.h"
#include "poolab/errors.h"
#include "poolab/evaltasks.h"
#include "poolab/io.h"
#include "poolab/stats.h"
#include "poolab/synthetic.h"
#include "poolab/training.h"

namespace poolab {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
};

struct EncodeArgs {
  std::string ckpt, input, out, dump_hidden;
};

struct EvalArgs {
  std::string ckpt, task, out, model_id;
  std::vector<std::string> data;
  std::uint64_t seed = 0;
};

struct CompareArgs {
  std::string baseline, challenger, out;
};

struct AnalyzeArgs {
  std::string dump, ckpt, input, out_prefix, task, data;
};

struct SynthArgs {
  std::string out;
  std::size_t clusters = 8, size = 2000;
  std::uint64_t seed = 0;
};

RunConfig LoadConfig(const std::string& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    return RunConfig::FromJson(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string TrainFile(const std::string& data) {
  if (fs::is_directory(data)) return (fs::path(data) / "train.jsonl").string();
  return data;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int CmdTrain(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = LoadConfig(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  const std::vector<TrainingExample> data = LoadTrainingExamples(TrainFile(a.data));
  EncoderModel model = EncoderModel::Init(cfg.model, cfg.pooling, cfg.train.seed);
  const std::size_t every = std::max<std::size_t>(1, cfg.train.max_steps / 10);
  const TrainResult r = Train(model, data, cfg.train, [&](std::size_t step, double loss) {
    if (step % every == 0 || step + 1 == cfg.train.max_steps) {
      out << "step " << step << " loss " << loss << "\n" << std::flush;
    }
  });
  SaveCheckpoint(a.out, cfg, model);
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) csv += std::to_string(i) + "," + Num(r.losses[i]) + "\n";
  const std::string trace = fs::path(a.out).replace_extension(".loss.csv").string();
  WriteFileAtomic(trace, csv);
  out << "wrote " << a.out << " (checksum " << std::hex << LoadCheckpoint(a.out).checksum
      << std::dec << ") and " << trace << "\n";
  return kExitOk;
}

HiddenStateDump SummariesDump(const EncoderModel& model, const std::vector<std::string>& texts,
                              std::string source) {
  HiddenStateDump d = HiddenStateDump::FromSummaries(EncodeLayerSummaries(model, texts), source);
  if (texts.empty()) {
    d.n_layers = static_cast<std::uint32_t>(model.model.n_layers);
    d.dim = static_cast<std::uint32_t>(model.model.hidden_dim);
  }
  return d;
}

int CmdEncode(const EncodeArgs& a, std::ostream& out) {
  const LoadedCheckpoint ck = LoadCheckpoint(a.ckpt);
  const std::vector<IdText> items = LoadIdTexts(a.input);
  std::vector<std::string> texts;
  EmbeddingFile f;
  for (const IdText& t : items) {
    texts.push_back(t.text);
    f.ids.push_back(t.id);
  }
  f.dim = ck.model.embedding_dim();
  f.vectors = Encode(ck.model, texts);
  WriteFileAtomic(a.out, f.Serialize());
  out << "encoded " << items.size() << " texts -> " << a.out << "\n";
  if (!a.dump_hidden.empty()) {
    WriteDump(a.dump_hidden, SummariesDump(ck.model, texts, "poolab:" + a.input));
    out << "wrote " << a.dump_hidden << "\n";
  }
  return kExitOk;
}

EvalResult EvalOne(const EncoderModel& model, TaskKind task, const std::string& dir,
                   const EvalContext& ctx) {
  const EmbedFn embed = ModelEmbedder(model);
  const fs::path p(dir);
  switch (task) {
    case TaskKind::kSts: return EvalSts(embed, LoadStsDataset(dir), ctx);
    case TaskKind::kRetrieval: return EvalRetrieval(embed, LoadRetrievalDataset(dir), ctx);
    case TaskKind::kClassification:
      return EvalClassification(embed, LoadLabeled((p / "train.jsonl").string()),
                                LoadLabeled((p / "test.jsonl").string()), ctx);
    case TaskKind::kClustering:
      return EvalClustering(embed, LoadLabeled((p / "data.jsonl").string()), ctx);
  }
  throw ConfigError("task: unsupported");
}

std::string DatasetName(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

int CmdEval(const EvalArgs& a, std::ostream& out) {
  const TaskKind task = ParseTaskKind(a.task);
  const LoadedCheckpoint ck = LoadCheckpoint(a.ckpt);
  const std::string model_id =
      !a.model_id.empty() ? a.model_id : fs::path(a.ckpt).stem().string();

  // One thread per dataset; merged in dataset-name order.
  std::vector<std::future<EvalResult>> jobs;
  for (const std::string& dir : a.data) {
    EvalContext ctx{model_id, DatasetName(dir), a.seed};
    jobs.push_back(std::async(std::launch::async, [&ck, task, dir, ctx] {
      return EvalOne(ck.model, task, dir, ctx);
    }));
  }
  std::vector<EvalResult> fresh;
  for (auto& j : jobs) fresh.push_back(j.get());
  std::sort(fresh.begin(), fresh.end(),
            [](const EvalResult& x, const EvalResult& y) { return x.dataset < y.dataset; });

  std::vector<EvalResult> all;
  if (fs::exists(a.out)) all = ResultsFromJson(ReadFile(a.out));
  for (EvalResult& r : fresh) {
    out << ToString(r.task) << "/" << r.dataset << " " << ToString(r.metric) << " = "
        << (r.score ? Num(*r.score) : std::string("n/a")) << "\n";
    auto same = [&](const EvalResult& e) {
      return e.model_id == r.model_id && e.task == r.task && e.dataset == r.dataset;
    };
    auto it = std::find_if(all.begin(), all.end(), same);
    if (it != all.end()) {
      *it = std::move(r);
    } else {
      all.push_back(std::move(r));
    }
  }
  WriteFileAtomic(a.out, ResultsToJson(all));
  return kExitOk;
}

int CmdCompare(const CompareArgs& a, std::ostream& out) {
  const std::vector<EvalResult> b = ResultsFromJson(ReadFile(a.baseline));
  const std::vector<EvalResult> c = ResultsFromJson(ReadFile(a.challenger));
  const ComparisonReport report = CompareModels(b, c);
  const std::string text = RenderReportText(report);
  WriteFileAtomic(a.out + ".txt", text);
  WriteFileAtomic(a.out + ".json", RenderReportJson(report));
  out << text;
  return kExitOk;
}

int CmdAnalyze(const AnalyzeArgs& a, std::ostream& out) {
  const bool from_dump = !a.dump.empty();
  if (from_dump == !a.ckpt.empty()) {
    throw ConfigError("analyze-layers: give exactly one of --dump or --ckpt");
  }
  if (!from_dump && a.input.empty() && a.task.empty()) {
    throw ConfigError("analyze-layers: --ckpt needs --input or --task/--data");
  }
  if (a.task.empty() != a.data.empty()) {
    throw ConfigError("analyze-layers: --task and --data go together");
  }
  std::optional<TaskKind> task;
  if (!a.task.empty()) {
    task = ParseTaskKind(a.task);
    if (*task != TaskKind::kSts && *task != TaskKind::kRetrieval) {
      throw ConfigError("task: per-layer evaluation supports sts and retrieval only");
    }
  }

  std::optional<LoadedCheckpoint> ck;
  if (!from_dump) ck = LoadCheckpoint(a.ckpt);
  std::optional<StsDataset> sts;
  std::optional<RetrievalDataset> ret;
  if (task == TaskKind::kSts) sts = LoadStsDataset(a.data);
  if (task == TaskKind::kRetrieval) ret = LoadRetrievalDataset(a.data);

  HiddenStateDump task_dump;
  if (from_dump) {
    task_dump = ReadDump(a.dump);
  } else if (sts) {
    task_dump = DumpForSts(ck->model, *sts);
  } else if (ret) {
    task_dump = DumpForRetrieval(ck->model, *ret);
  }
  HiddenStateDump corr_dump = task_dump;
  if (!from_dump && !a.input.empty()) {
    std::vector<std::string> texts;
    for (const IdText& t : LoadIdTexts(a.input)) texts.push_back(t.text);
    corr_dump = SummariesDump(ck->model, texts, "poolab:" + a.input);
  }

  const LayerCorrelationMatrix m = LayerCorrelation(corr_dump);
  WriteFileAtomic(a.out_prefix + ".corr.csv", HeatmapCsv(m));
  WriteFileAtomic(a.out_prefix + ".corr.svg", HeatmapSvg(m, corr_dump.source));
  out << "correlation over " << m.n_items << " items, " << m.n_layers() << " layers -> "
      << a.out_prefix << ".corr.{csv,svg}\n";
  if (task) {
    std::vector<double> gold;
    if (sts) {
      for (const StsPair& p : sts->pairs) gold.push_back(p.score);
    }
    const LayerSeries s = sts ? PerLayerSts(task_dump, gold) : PerLayerRetrieval(task_dump, *ret);
    WriteFileAtomic(a.out_prefix + ".layers.csv", SeriesCsv(s));
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      out << "layer " << i << " " << (s.scores[i] ? Num(*s.scores[i]) : std::string("n/a"))
          << "\n";
    }
    if (s.argmax) out << "argmax layer " << *s.argmax << "\n";
  }
  return kExitOk;
}

int CmdSynth(const SynthArgs& a, std::ostream& out) {
  const SyntheticOptions opt{a.clusters, a.size, a.seed};
  WriteSyntheticSuite(a.out, GenerateSynthetic(opt));
  out << "wrote synthetic suite (" << a.clusters << " clusters, " << a.size
      << " training examples) to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"poolab: pooling strategies for decoder-style text embedders"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", ta.config, "Run config JSON")->required();
  train->add_option("--data", ta.data, "train.jsonl or a directory containing it")->required();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--seed", ta.seed, "Overrides train.seed");

  EncodeArgs ea;
  auto* encode = app.add_subcommand("encode", "Embed a JSON-lines file of {id, text}");
  encode->add_option("--ckpt", ea.ckpt)->required();
  encode->add_option("--input", ea.input)->required();
  encode->add_option("--out", ea.out, "Embedding file")->required();
  encode->add_option("--dump-hidden", ea.dump_hidden, "Also write per-layer summaries");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on task datasets");
  eval->add_option("--ckpt", va.ckpt)->required();
  eval->add_option("--task", va.task, "sts | retrieval | classification | clustering")->required();
  eval->add_option("--data", va.data, "Dataset directory (repeatable)")->required();
  eval->add_option("--out", va.out, "Results JSON (records are appended)")->required();
  eval->add_option("--model-id", va.model_id, "Defaults to the checkpoint file stem");
  eval->add_option("--seed", va.seed, "Seed for probe training and k-means");

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Wilcoxon comparison of two results files");
  compare->add_option("--baseline", ca.baseline)->required();
  compare->add_option("--challenger", ca.challenger)->required();
  compare->add_option("--out", ca.out, "Report prefix (.txt and .json are written)")->required();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze-layers", "Cross-layer correlation and per-layer scores");
  analyze->add_option("--dump", aa.dump, "Hidden-state dump");
  analyze->add_option("--ckpt", aa.ckpt);
  analyze->add_option("--input", aa.input, "JSON-lines {id, text} for the correlation heatmap");
  analyze->add_option("--task", aa.task, "sts | retrieval, for per-layer scores");
  analyze->add_option("--data", aa.data, "Dataset directory for --task");
  analyze->add_option("--out-prefix", aa.out_prefix)->required();

  SynthArgs sa;
  auto* synth = app.add_subcommand("gen-synthetic", "Write the synthetic training/eval suite");
  synth->add_option("--out", sa.out)->required();
  synth->add_option("--clusters", sa.clusters)->default_val(8);
  synth->add_option("--size", sa.size)->default_val(2000);
  synth->add_option("--seed", sa.seed)->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (train->parsed()) return CmdTrain(ta, out);
    if (encode->parsed()) return CmdEncode(ea, out);
    if (eval->parsed()) return CmdEval(va, out);
    if (compare->parsed()) return CmdCompare(ca, out);
    if (analyze->parsed()) return CmdAnalyze(aa, out);
    if (synth->parsed()) return CmdSynth(sa, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace poolab
