// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "poolab/errors.h"
#include "poolab/io.h"
#include "poolab/training.h"

namespace poolab {

std::vector<double> HiddenStateDump::Vector(std::size_t layer, std::size_t item) const {
  const float* p = values.data() + (layer * n_items + item) * dim;
  return std::vector<double>(p, p + dim);
}

void HiddenStateDump::Validate() const {
  const std::uint64_t expect = std::uint64_t{n_layers} * n_items * dim;
  if (values.size() != expect) {
    throw DataError("hidden-state dump: " + std::to_string(values.size()) +
                    " values for declared " + std::to_string(n_layers) + "x" +
                    std::to_string(n_items) + "x" + std::to_string(dim));
  }
}

HiddenStateDump HiddenStateDump::FromSummaries(const std::vector<LayerSummary>& items,
                                               std::string source) {
  HiddenStateDump d;
  d.source = std::move(source);
  d.n_items = static_cast<std::uint32_t>(items.size());
  if (items.empty()) return d;
  d.n_layers = static_cast<std::uint32_t>(items[0].values.dim(0));
  d.dim = static_cast<std::uint32_t>(items[0].values.dim(1));
  d.values.resize(std::size_t{d.n_layers} * d.n_items * d.dim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].values.shape() != items[0].values.shape()) {
      throw DimensionError("hidden-state dump: items disagree on [l x d]");
    }
    for (std::size_t l = 0; l < d.n_layers; ++l) {
      for (std::size_t k = 0; k < d.dim; ++k) {
        d.values[(l * d.n_items + i) * d.dim + k] = static_cast<float>(items[i].values.at(l, k));
      }
    }
  }
  return d;
}

std::string HiddenStateDump::Serialize() const {
  Validate();
  ByteWriter w;
  w.Bytes("HSD1");
  w.U32(n_layers);
  w.U32(n_items);
  w.U32(dim);
  for (float v : values) w.F32(v);
  w.ShortString(source);
  return w.str();
}

HiddenStateDump HiddenStateDump::Parse(std::string_view bytes) {
  ByteReader r(bytes, "hidden-state dump");
  if (r.Bytes(4) != "HSD1") throw DataError("hidden-state dump: bad magic");
  HiddenStateDump d;
  d.n_layers = r.U32();
  d.n_items = r.U32();
  d.dim = r.U32();
  const std::uint64_t n = std::uint64_t{d.n_layers} * d.n_items * d.dim;
  if (r.remaining() < n * 4 + 2) {
    throw DataError("hidden-state dump: payload of " + std::to_string(r.remaining()) +
                    " bytes is shorter than the declared " + std::to_string(n) + " values");
  }
  d.values.resize(n);
  for (float& v : d.values) v = r.F32();
  d.source = r.ShortString();
  if (r.remaining() != 0) {
    throw DataError("hidden-state dump: " + std::to_string(r.remaining()) +
                    " bytes beyond the declared payload");
  }
  return d;
}

HiddenStateDump ReadDump(const std::string& path) {
  try {
    return HiddenStateDump::Parse(ReadFile(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void WriteDump(const std::string& path, const HiddenStateDump& dump) {
  WriteFileAtomic(path, dump.Serialize());
}

std::optional<double> LayerCorrelationMatrix::at(std::size_t a, std::size_t b) const {
  if (counts[a * n_layers() + b] == 0) return std::nullopt;
  return values.at(a, b);
}

LayerCorrelationMatrix LayerCorrelation(const HiddenStateDump& dump) {
  dump.Validate();
  if (dump.n_items < 1) throw DataError("layer correlation: dump has no items");
  if (dump.dim < 2) throw DataError("layer correlation: dim must be at least 2");
  const std::size_t l = dump.n_layers;
  LayerCorrelationMatrix m;
  m.values = NdArray({l, l});
  m.counts.assign(l * l, 0);
  m.n_items = dump.n_items;
  std::vector<std::vector<double>> ranks(l);
  std::vector<bool> constant(l);
  for (std::size_t item = 0; item < dump.n_items; ++item) {
    for (std::size_t a = 0; a < l; ++a) {
      const std::vector<double> v = dump.Vector(a, item);
      constant[a] = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
      ranks[a] = AverageRanks(v);
    }
    for (std::size_t a = 0; a < l; ++a) {
      if (constant[a]) continue;
      m.values.at(a, a) += 1.0;
      ++m.counts[a * l + a];
      for (std::size_t b = a + 1; b < l; ++b) {
        if (constant[b]) continue;
        const double r = Pearson(ranks[a], ranks[b]);
        m.values.at(a, b) += r;
        m.values.at(b, a) += r;
        ++m.counts[a * l + b];
        ++m.counts[b * l + a];
      }
    }
  }
  for (std::size_t i = 0; i < l * l; ++i) {
    m.values[i] = m.counts[i] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : m.values[i] / static_cast<double>(m.counts[i]);
  }
  return m;
}

namespace {

// Unit-norm rows of one layer for items [lo, lo + n) taken with `stride`.
NdArray LayerRows(const HiddenStateDump& d, std::size_t layer, std::size_t first,
                  std::size_t n, std::size_t stride) {
  NdArray out({n, d.dim});
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> v = d.Vector(layer, first + i * stride);
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double inv = ss > 0.0 ? 1.0 / std::sqrt(ss) : 0.0;
    auto row = out.row(i);
    for (std::size_t k = 0; k < v.size(); ++k) row[k] = v[k] * inv;
  }
  return out;
}

void FillArgmax(LayerSeries& s) {
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (s.scores[i] && (!s.argmax || *s.scores[i] > *s.scores[*s.argmax])) s.argmax = i;
  }
}

std::vector<std::string> Formatted(const std::vector<std::string>& texts,
                                   std::string_view instruction) {
  std::vector<std::string> out;
  for (const std::string& t : texts) out.push_back(FormatQuery(instruction, t));
  return out;
}

}  // namespace

LayerSeries PerLayerSts(const HiddenStateDump& dump, std::span<const double> gold) {
  dump.Validate();
  if (dump.n_items != 2 * gold.size()) {
    throw DataError("per-layer STS: dump has " + std::to_string(dump.n_items) +
                    " items for " + std::to_string(gold.size()) + " pairs");
  }
  LayerSeries s;
  for (std::size_t l = 0; l < dump.n_layers; ++l) {
    const NdArray e1 = LayerRows(dump, l, 0, gold.size(), 2);
    const NdArray e2 = LayerRows(dump, l, 1, gold.size(), 2);
    s.scores.push_back(StsScore(e1, e2, gold));
  }
  FillArgmax(s);
  return s;
}

LayerSeries PerLayerRetrieval(const HiddenStateDump& dump, const RetrievalDataset& data) {
  dump.Validate();
  data.Validate();
  const std::size_t nq = data.queries.size(), nd = data.corpus.size();
  if (dump.n_items != nq + nd) {
    throw DataError("per-layer retrieval: dump has " + std::to_string(dump.n_items) +
                    " items for " + std::to_string(nq) + " queries + " + std::to_string(nd) +
                    " documents");
  }
  LayerSeries s;
  for (std::size_t l = 0; l < dump.n_layers; ++l) {
    s.scores.push_back(
        RetrievalScore(LayerRows(dump, l, 0, nq, 1), LayerRows(dump, l, nq, nd, 1), data));
  }
  FillArgmax(s);
  return s;
}

HiddenStateDump DumpForSts(const EncoderModel& model, const StsDataset& data,
                           std::string_view instruction) {
  std::vector<std::string> texts;
  for (const StsPair& p : data.pairs) {
    texts.push_back(p.sentence1);
    texts.push_back(p.sentence2);
  }
  return HiddenStateDump::FromSummaries(
      EncodeLayerSummaries(model, Formatted(texts, instruction)), "poolab:sts");
}

HiddenStateDump DumpForRetrieval(const EncoderModel& model, const RetrievalDataset& data,
                                 std::string_view instruction) {
  std::vector<std::string> q, texts;
  for (const IdText& t : data.queries) q.push_back(t.text);
  texts = Formatted(q, instruction);
  for (const IdText& t : data.corpus) texts.push_back(t.text);
  return HiddenStateDump::FromSummaries(EncodeLayerSummaries(model, texts), "poolab:retrieval");
}

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string HeatmapCsv(const LayerCorrelationMatrix& m) {
  const std::size_t l = m.n_layers();
  std::ostringstream os;
  os << "layer";
  for (std::size_t b = 0; b < l; ++b) os << "," << b;
  os << "\n";
  for (std::size_t a = 0; a < l; ++a) {
    os << a;
    for (std::size_t b = 0; b < l; ++b) {
      os << ",";
      if (auto v = m.at(a, b)) os << Num(*v);
    }
    os << "\n";
  }
  return os.str();
}

LayerCorrelationMatrix ParseHeatmapCsv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t p = 0;
    for (;;) {
      const std::size_t c = line.find(',', p);
      cells.emplace_back(line.substr(p, c == std::string_view::npos ? c : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DataError("heatmap csv: empty");
  const std::size_t l = rows.size() - 1;
  LayerCorrelationMatrix m;
  m.values = NdArray({l, l});
  m.counts.assign(l * l, 0);
  for (std::size_t a = 0; a < l; ++a) {
    if (rows[a + 1].size() != l + 1) throw DataError("heatmap csv: ragged row");
    for (std::size_t b = 0; b < l; ++b) {
      const std::string& cell = rows[a + 1][b + 1];
      if (cell.empty()) {
        m.values.at(a, b) = std::numeric_limits<double>::quiet_NaN();
      } else {
        m.values.at(a, b) = std::strtod(cell.c_str(), nullptr);
        m.counts[a * l + b] = 1;
      }
    }
  }
  return m;
}

namespace {

struct Rgb {
  double r, g, b;
};

std::string ColorFor(std::optional<double> v) {
  if (!v) return "#bdbdbd";
  constexpr Rgb kBlue{33, 102, 172}, kWhite{247, 247, 247}, kRed{178, 24, 43};
  const double t = std::clamp(*v, -1.0, 1.0);
  const Rgb& lo = t < 0 ? kBlue : kWhite;
  const Rgb& hi = t < 0 ? kWhite : kRed;
  const double f = t < 0 ? t + 1.0 : t;
  auto mix = [&](double a, double b) {
    return static_cast<int>(std::lround(a + (b - a) * f));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(lo.r, hi.r), mix(lo.g, hi.g),
                mix(lo.b, hi.b));
  return buf;
}

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string HeatmapSvg(const LayerCorrelationMatrix& m, std::string_view title) {
  const std::size_t l = m.n_layers();
  constexpr int kCell = 24, kLeft = 56, kTop = 36, kLegend = 70;
  const int grid = static_cast<int>(l) * kCell;
  const int width = kLeft + grid + kLegend;
  const int height = kTop + grid + 48;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << kLeft + grid / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"12\">"
       << XmlEscape(title) << "</text>\n";
  }
  // Row r from the top shows layer l-1-r; column c shows layer c.
  for (std::size_t r = 0; r < l; ++r) {
    const std::size_t ya = l - 1 - r;
    for (std::size_t c = 0; c < l; ++c) {
      os << "<rect x=\"" << kLeft + static_cast<int>(c) * kCell << "\" y=\""
         << kTop + static_cast<int>(r) * kCell << "\" width=\"" << kCell << "\" height=\"" << kCell
         << "\" fill=\"" << ColorFor(m.at(ya, c)) << "\"/>\n";
    }
  }
  for (std::size_t c = 0; c < l; ++c) {
    os << "<text x=\"" << kLeft + static_cast<int>(c) * kCell + kCell / 2 << "\" y=\""
       << kTop + grid + 14 << "\" text-anchor=\"middle\">" << c << "</text>\n";
  }
  for (std::size_t r = 0; r < l; ++r) {
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + static_cast<int>(r) * kCell + kCell / 2 + 4
       << "\" text-anchor=\"end\">" << l - 1 - r << "</text>\n";
  }
  os << "<text x=\"" << kLeft + grid / 2 << "\" y=\"" << kTop + grid + 32
     << "\" text-anchor=\"middle\">layer</text>\n"
     << "<text x=\"14\" y=\"" << kTop + grid / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << kTop + grid / 2 << ")\">layer</text>\n";
  // Colour bar over [-1, 1], +1 at the top.
  const int bx = kLeft + grid + 16, steps = 20;
  const double bh = static_cast<double>(std::max(grid, 100)) / steps;
  for (int i = 0; i < steps; ++i) {
    const double v = 1.0 - (i + 0.5) * 2.0 / steps;
    os << "<rect x=\"" << bx << "\" y=\"" << Num(kTop + i * bh) << "\" width=\"12\" height=\""
       << Num(bh) << "\" fill=\"" << ColorFor(v) << "\"/>\n";
  }
  os << "<text x=\"" << bx + 16 << "\" y=\"" << kTop + 8 << "\">1</text>\n"
     << "<text x=\"" << bx + 16 << "\" y=\"" << Num(kTop + steps * bh / 2 + 4) << "\">0</text>\n"
     << "<text x=\"" << bx + 16 << "\" y=\"" << Num(kTop + steps * bh) << "\">-1</text>\n"
     << "</svg>\n";
  return os.str();
}

std::string SeriesCsv(const LayerSeries& s) {
  std::ostringstream os;
  os << "layer,score\n";
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    os << i << ",";
    if (s.scores[i]) os << Num(*s.scores[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace poolab
