// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/io.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "poolab/errors.h"

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace poolab {

namespace fs = std::filesystem;
using nlohmann::json;

void ByteWriter::Put(const void* p, std::size_t n) {
  buf_.append(static_cast<const char*>(p), n);
}

void ByteWriter::ShortString(std::string_view s) {
  if (s.size() > 0xFFFF) {
    throw ContractError("string of " + std::to_string(s.size()) +
                        " bytes exceeds the 65535-byte field limit");
  }
  U16(static_cast<std::uint16_t>(s.size()));
  Bytes(s);
}

void ByteReader::Get(void* p, std::size_t n) {
  if (remaining() < n) {
    throw DataError(context_ + ": truncated at byte " + std::to_string(pos_) + " (need " +
                    std::to_string(n) + ", have " + std::to_string(remaining()) + ")");
  }
  std::memcpy(p, bytes_.data() + pos_, n);
  pos_ += n;
}

std::uint16_t ByteReader::U16() { std::uint16_t v; Get(&v, sizeof v); return v; }
std::uint32_t ByteReader::U32() { std::uint32_t v; Get(&v, sizeof v); return v; }
std::uint64_t ByteReader::U64() { std::uint64_t v; Get(&v, sizeof v); return v; }
float ByteReader::F32() { float v; Get(&v, sizeof v); return v; }

std::string_view ByteReader::Bytes(std::size_t n) {
  if (remaining() < n) {
    throw DataError(context_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::string_view out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::ShortString() {
  const std::uint16_t n = U16();
  return std::string(Bytes(n));
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const std::string& path, std::string_view bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(tmp.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DataError(path + ": rename failed: " + ec.message());
}

std::string EmbeddingFile::Serialize() const {
  const std::size_t count = ids.size();
  if (vectors.size() != count * dim) {
    throw DimensionError("embedding file: " + std::to_string(count) + " ids for " +
                         ShapeToString(vectors.shape()) + " vectors");
  }
  ByteWriter w;
  w.Bytes("EMB1");
  w.U32(static_cast<std::uint32_t>(count));
  w.U32(static_cast<std::uint32_t>(dim));
  for (double v : vectors.data()) w.F32(static_cast<float>(v));
  std::string table;
  for (std::size_t i = 0; i < count; ++i) {
    if (ids[i].find('\n') != std::string::npos) {
      throw DataError("embedding file: id contains a newline");
    }
    if (i) table += '\n';
    table += ids[i];
  }
  w.ShortString(table);
  return w.str();
}

EmbeddingFile EmbeddingFile::Parse(std::string_view bytes) {
  ByteReader r(bytes, "embedding file");
  if (r.Bytes(4) != "EMB1") throw DataError("embedding file: bad magic");
  const std::uint32_t count = r.U32();
  const std::uint32_t dim = r.U32();
  if (r.remaining() < std::uint64_t{count} * dim * 4 + 2) {
    throw DataError("embedding file: payload shorter than header declares");
  }
  EmbeddingFile f;
  f.dim = dim;
  f.vectors = NdArray({count, dim});
  for (double& v : f.vectors.data()) v = r.F32();
  const std::string table = r.ShortString();
  if (r.remaining() != 0) throw DataError("embedding file: trailing bytes");
  if (count > 0) {
    std::size_t start = 0;
    for (;;) {
      const std::size_t nl = table.find('\n', start);
      f.ids.push_back(table.substr(start, nl == std::string::npos ? nl : nl - start));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  } else if (!table.empty()) {
    throw DataError("embedding file: ids present for zero rows");
  }
  if (f.ids.size() != count) {
    throw DataError("embedding file: " + std::to_string(f.ids.size()) + " ids for " +
                    std::to_string(count) + " rows");
  }
  return f;
}

namespace {

// Calls fn(object, line_number) for every non-blank line.
template <typename Fn>
void ForEachJsonLine(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json o;
    try {
      o = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    if (!o.is_object()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected a JSON object");
    }
    fn(o, lineno);
  }
}

std::string Field(const json& o, const char* key, const std::string& path, std::size_t line,
                  bool required = true) {
  if (!o.contains(key)) {
    if (!required) return {};
    throw DataError(path + ":" + std::to_string(line) + ": missing field '" + key + "'");
  }
  if (o[key].is_string()) return o[key].get<std::string>();
  if (o[key].is_number_integer()) return std::to_string(o[key].get<long long>());
  throw DataError(path + ":" + std::to_string(line) + ": field '" + key + "' must be a string");
}

double Number(const json& o, const char* key, const std::string& path, std::size_t line) {
  if (!o.contains(key) || !o[key].is_number()) {
    throw DataError(path + ":" + std::to_string(line) + ": field '" + key +
                    "' missing or not a number");
  }
  return o[key].get<double>();
}

}  // namespace

std::vector<IdText> LoadIdTexts(const std::string& path) {
  std::vector<IdText> out;
  ForEachJsonLine(path, [&](const json& o, std::size_t line) {
    out.push_back({Field(o, "id", path, line), Field(o, "text", path, line)});
  });
  return out;
}

std::vector<TrainingExample> LoadTrainingExamples(const std::string& path) {
  std::vector<TrainingExample> out;
  ForEachJsonLine(path, [&](const json& o, std::size_t line) {
    TrainingExample ex{Field(o, "instruction", path, line, false), Field(o, "query", path, line),
                       Field(o, "positive", path, line), Field(o, "negative", path, line)};
    try {
      ex.Validate();
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  });
  return out;
}

LabeledDataset LoadLabeled(const std::string& path) {
  LabeledDataset out;
  ForEachJsonLine(path, [&](const json& o, std::size_t line) {
    out.items.push_back({Field(o, "text", path, line), Field(o, "label", path, line)});
  });
  return out;
}

StsDataset LoadStsDataset(const std::string& dir) {
  const std::string path = (fs::path(dir) / "pairs.jsonl").string();
  StsDataset out;
  ForEachJsonLine(path, [&](const json& o, std::size_t line) {
    out.pairs.push_back({Field(o, "sentence1", path, line), Field(o, "sentence2", path, line),
                         Number(o, "score", path, line)});
  });
  return out;
}

RetrievalDataset LoadRetrievalDataset(const std::string& dir) {
  RetrievalDataset out;
  out.corpus = LoadIdTexts((fs::path(dir) / "corpus.jsonl").string());
  out.queries = LoadIdTexts((fs::path(dir) / "queries.jsonl").string());
  const std::string qpath = (fs::path(dir) / "qrels.tsv").string();
  std::ifstream in(qpath);
  if (!in) throw DataError(qpath + ": cannot open");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) {
      throw DataError(qpath + ":" + std::to_string(lineno) + ": expected 3 tab-separated columns");
    }
    if (lineno == 1 && cols[0] == "query_id") continue;  // optional header
    double grade = 0.0;
    try {
      std::size_t used = 0;
      grade = std::stod(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(qpath + ":" + std::to_string(lineno) + ": grade '" + cols[2] +
                      "' is not a number");
    }
    out.qrels[cols[0]][cols[1]] = grade;
  }
  out.Validate();
  return out;
}

}  // namespace poolab
