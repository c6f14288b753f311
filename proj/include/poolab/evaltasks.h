// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Embedding benchmark tasks and their main metrics: STS (Spearman of cosine
// similarity), retrieval (NDCG@10), classification (linear-probe accuracy)
// and clustering (k-means V-measure).

#ifndef POOLAB_EVALTASKS_H_
#define POOLAB_EVALTASKS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poolab/ndarray.h"
#include "poolab/pooling.h"

namespace poolab {

enum class TaskKind { kSts, kRetrieval, kClassification, kClustering };
enum class Metric { kSpearmanCosine, kNdcgAt10, kAccuracy, kVMeasure };

std::string_view ToString(TaskKind t);   // "STS", "Retrieval", ...
std::string_view ToString(Metric m);     // "SpearmanCosine", "NDCG@10", ...
// Accepts the display names and the lowercase CLI names ("sts", ...).
TaskKind ParseTaskKind(std::string_view s);
Metric ParseMetric(std::string_view s);
Metric MetricFor(TaskKind t);

struct EvalResult {
  std::string model_id;
  TaskKind task = TaskKind::kSts;
  std::string dataset;
  Metric metric = Metric::kSpearmanCosine;
  std::optional<double> score;  // empty = undefined (for example collapsed embeddings)
  std::vector<std::pair<std::string, double>> extras;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

// JSON array of EvalResult objects. Parsing throws DataError.
std::string ResultsToJson(std::span<const EvalResult> results);
std::vector<EvalResult> ResultsFromJson(std::string_view text);

// ---- metrics ---------------------------------------------------------------

// 1-based ranks, ties get the mean of the positions they span.
std::vector<double> AverageRanks(std::span<const double> x);
double Pearson(std::span<const double> x, std::span<const double> y);
// Empty when either input is constant.
std::optional<double> Spearman(std::span<const double> x, std::span<const double> y);

using Qrels = std::map<std::string, double>;  // doc id -> grade
double NdcgAtK(std::span<const std::string> ranked, const Qrels& qrels, std::size_t k = 10);

struct VMeasureScore {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};
VMeasureScore VMeasure(std::span<const int> gold, std::span<const int> predicted);

struct KMeansResult {
  std::vector<int> labels;
  NdArray centroids;
  double inertia = 0.0;
};
// k-means++ seeding, Lloyd iterations, best inertia over `restarts` runs.
KMeansResult KMeans(const NdArray& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iter = 300);

struct LinearProbe {
  NdArray weights;  // [d x c]
  std::vector<double> bias;
  std::vector<int> Predict(const NdArray& x) const;
};
LinearProbe FitLinearProbe(const NdArray& x, std::span<const int> labels, std::size_t n_classes,
                           std::uint64_t seed, std::size_t epochs = 100,
                           double learning_rate = 0.5, std::size_t batch_size = 32);

// ---- datasets --------------------------------------------------------------

struct StsPair {
  std::string sentence1, sentence2;
  double score = 0.0;
};
struct StsDataset {
  std::vector<StsPair> pairs;
};

struct IdText {
  std::string id, text;
};
struct RetrievalDataset {
  std::vector<IdText> corpus;
  std::vector<IdText> queries;
  std::map<std::string, Qrels> qrels;  // query id -> judgements

  void Validate() const;  // throws DataError on unresolved or duplicate ids
};

struct LabeledText {
  std::string text, label;
};
struct LabeledDataset {
  std::vector<LabeledText> items;
};

// ---- task drivers ----------------------------------------------------------

// Maps a list of texts to unit-norm embedding rows.
using EmbedFn = std::function<NdArray(std::span<const std::string>)>;
EmbedFn ModelEmbedder(const EncoderModel& model, std::size_t chunk = 64);

inline constexpr std::string_view kStsInstruction = "Retrieve semantically similar text.";
inline constexpr std::string_view kRetrievalInstruction =
    "Given a query, retrieve relevant passages that answer the query.";

struct EvalContext {
  std::string model_id;
  std::string dataset;
  std::uint64_t seed = 0;
};

// Both sentences carry the instruction.
EvalResult EvalSts(const EmbedFn& embed, const StsDataset& data, const EvalContext& ctx,
                   std::string_view instruction = kStsInstruction);
// Only queries carry the instruction.
EvalResult EvalRetrieval(const EmbedFn& embed, const RetrievalDataset& data,
                         const EvalContext& ctx,
                         std::string_view instruction = kRetrievalInstruction);
EvalResult EvalClassification(const EmbedFn& embed, const LabeledDataset& train,
                              const LabeledDataset& test, const EvalContext& ctx);
EvalResult EvalClustering(const EmbedFn& embed, const LabeledDataset& data,
                          const EvalContext& ctx);

// Embedding-level forms shared with the layer analysis.
std::optional<double> StsScore(const NdArray& emb1, const NdArray& emb2,
                               std::span<const double> gold);
std::optional<double> RetrievalScore(const NdArray& query_emb, const NdArray& corpus_emb,
                                     const RetrievalDataset& data);

}  // namespace poolab

#endif  // POOLAB_EVALTASKS_H_
