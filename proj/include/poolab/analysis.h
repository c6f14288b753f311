// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Layer diagnostics over per-layer summary vectors: the cross-layer Spearman
// correlation heatmap and per-layer downstream scores. Inputs come either
// from an in-repo model or from a hidden-state dump file written by any
// external process.

#ifndef POOLAB_ANALYSIS_H_
#define POOLAB_ANALYSIS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poolab/evaltasks.h"
#include "poolab/ndarray.h"
#include "poolab/pooling.h"

namespace poolab {

// On disk (little-endian): "HSD1", u32 n_layers, u32 n_items, u32 dim,
// f32 values [layer][item][dim], u16 length + UTF-8 source label.
struct HiddenStateDump {
  std::uint32_t n_layers = 0;
  std::uint32_t n_items = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;
  std::string source;

  float at(std::size_t layer, std::size_t item, std::size_t k) const {
    return values[(layer * n_items + item) * dim + k];
  }
  // One item's layer-`layer` vector.
  std::vector<double> Vector(std::size_t layer, std::size_t item) const;
  void Validate() const;  // throws DataError

  static HiddenStateDump FromSummaries(const std::vector<LayerSummary>& items,
                                       std::string source);
  std::string Serialize() const;
  static HiddenStateDump Parse(std::string_view bytes);  // throws DataError
};

HiddenStateDump ReadDump(const std::string& path);
void WriteDump(const std::string& path, const HiddenStateDump& dump);

struct LayerCorrelationMatrix {
  NdArray values;                   // [l x l]; NaN where no item contributed
  std::vector<std::size_t> counts;  // items contributing to each entry
  std::size_t n_items = 0;

  std::size_t n_layers() const { return values.empty() ? 0 : values.dim(0); }
  std::optional<double> at(std::size_t a, std::size_t b) const;
};

// Entry (a, b) is the mean over items of the Spearman correlation between
// layer a's and layer b's vectors of that item, components as observations.
// Items whose vector is constant in either layer are skipped for that entry.
LayerCorrelationMatrix LayerCorrelation(const HiddenStateDump& dump);

struct LayerSeries {
  std::vector<std::optional<double>> scores;  // one per layer
  std::optional<std::size_t> argmax;          // first best defined score
};

// STS dump items are interleaved: sentence1 of pair 0, sentence2 of pair 0, ...
LayerSeries PerLayerSts(const HiddenStateDump& dump, std::span<const double> gold);
// Retrieval dump items are all queries (dataset order) followed by the corpus.
LayerSeries PerLayerRetrieval(const HiddenStateDump& dump, const RetrievalDataset& data);

// Model forms: texts are formatted as in the task drivers, summarized per
// layer and fed to the dump forms.
HiddenStateDump DumpForSts(const EncoderModel& model, const StsDataset& data,
                           std::string_view instruction = kStsInstruction);
HiddenStateDump DumpForRetrieval(const EncoderModel& model, const RetrievalDataset& data,
                                 std::string_view instruction = kRetrievalInstruction);

std::string HeatmapCsv(const LayerCorrelationMatrix& m);
LayerCorrelationMatrix ParseHeatmapCsv(std::string_view csv);
// Self-contained SVG: x axis layers 0..l-1, y axis l-1..0 top to bottom,
// blue-white-red over [-1, 1], grey for missing entries.
std::string HeatmapSvg(const LayerCorrelationMatrix& m, std::string_view title = {});
std::string SeriesCsv(const LayerSeries& s);

}  // namespace poolab

#endif  // POOLAB_ANALYSIS_H_
