// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// File plumbing: little-endian byte streams, atomic writes, the embedding
// file format and the JSON-lines dataset readers.

#ifndef POOLAB_IO_H_
#define POOLAB_IO_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "poolab/evaltasks.h"
#include "poolab/ndarray.h"
#include "poolab/training.h"

namespace poolab {

class ByteWriter {
 public:
  void U16(std::uint16_t v) { Put(&v, sizeof v); }
  void U32(std::uint32_t v) { Put(&v, sizeof v); }
  void U64(std::uint64_t v) { Put(&v, sizeof v); }
  void F32(float v) { Put(&v, sizeof v); }
  void Bytes(std::string_view s) { buf_.append(s); }
  // u16 length prefix; throws ContractError above 65535 bytes.
  void ShortString(std::string_view s);
  const std::string& str() const { return buf_; }

 private:
  void Put(const void* p, std::size_t n);
  std::string buf_;
};

// Throws DataError("<context>: truncated ...") when reading past the end.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}
  std::uint16_t U16();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  std::string_view Bytes(std::size_t n);
  std::string ShortString();
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  const std::string& context() const { return context_; }

 private:
  void Get(void* p, std::size_t n);
  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

// Throws DataError if the file cannot be read.
std::string ReadFile(const std::string& path);
// Writes to a sibling temporary file, then renames it over `path`.
void WriteFileAtomic(const std::string& path, std::string_view bytes);

// "EMB1", u32 count, u32 dim, f32 rows, u16 length + newline-joined ids.
struct EmbeddingFile {
  std::vector<std::string> ids;
  NdArray vectors;  // [count x dim], values representable as f32
  std::size_t dim = 0;

  std::string Serialize() const;
  static EmbeddingFile Parse(std::string_view bytes);
};

// JSON-lines readers. Errors name the file and 1-based line number.
std::vector<IdText> LoadIdTexts(const std::string& path);
std::vector<TrainingExample> LoadTrainingExamples(const std::string& path);
LabeledDataset LoadLabeled(const std::string& path);
// <dir>/pairs.jsonl
StsDataset LoadStsDataset(const std::string& dir);
// <dir>/corpus.jsonl, <dir>/queries.jsonl, <dir>/qrels.tsv
RetrievalDataset LoadRetrievalDataset(const std::string& dir);

}  // namespace poolab

#endif  // POOLAB_IO_H_
