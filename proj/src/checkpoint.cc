// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/checkpoint.h"

#include <map>

#include "poolab/errors.h"
#include "poolab/io.h"

namespace poolab {

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string SerializeCheckpoint(const RunConfig& config, const EncoderModel& model) {
  ByteWriter w;
  w.Bytes("PLCK");
  w.U32(kCheckpointVersion);
  const std::string cfg = config.ToJson();
  w.U32(static_cast<std::uint32_t>(cfg.size()));
  w.Bytes(cfg);
  const auto tensors = model.NamedTensors();
  w.U32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, var] : tensors) {
    w.ShortString(name);
    const NdArray& v = var.value();
    w.U32(static_cast<std::uint32_t>(v.rank()));
    for (std::size_t d : v.shape()) w.U32(static_cast<std::uint32_t>(d));
    for (double x : v.data()) w.F32(static_cast<float>(x));
  }
  const std::uint64_t sum = Fnv1a64(w.str());
  w.U64(sum);
  return w.str();
}

LoadedCheckpoint ParseCheckpoint(std::string_view bytes) {
  if (bytes.size() < 16) throw DataError("checkpoint: file too short");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8), "checkpoint");
  const std::uint64_t stored = tail.U64();

  ByteReader r(body, "checkpoint");
  if (r.Bytes(4) != "PLCK") throw DataError("checkpoint: bad magic");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (Fnv1a64(body) != stored) throw DataError("checkpoint: checksum mismatch");

  const std::uint32_t cfg_len = r.U32();
  RunConfig config;
  try {
    config = RunConfig::FromJson(r.Bytes(cfg_len));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: embedded config invalid: ") + e.what());
  }
  LoadedCheckpoint out{config, EncoderModel::Init(config.model, config.pooling, 0), stored};

  std::map<std::string, Var> expected;
  for (auto& [name, var] : out.model.NamedTensors()) expected.emplace(name, var);
  const std::uint32_t count = r.U32();
  if (count != expected.size()) {
    throw DataError("checkpoint: " + std::to_string(count) + " tensors, model expects " +
                    std::to_string(expected.size()));
  }
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.ShortString();
    auto it = expected.find(name);
    if (it == expected.end()) throw DataError("checkpoint: unexpected tensor '" + name + "'");
    Shape shape(r.U32());
    for (std::size_t& d : shape) d = r.U32();
    NdArray& dst = it->second.mutable_value();
    if (shape != dst.shape()) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " + ShapeToString(shape) +
                      ", model expects " + ShapeToString(dst.shape()));
    }
    for (double& x : dst.data()) x = r.F32();
    expected.erase(it);
  }
  if (r.remaining() != 0) throw DataError("checkpoint: trailing bytes before checksum");
  return out;
}

void SaveCheckpoint(const std::string& path, const RunConfig& config, const EncoderModel& model) {
  WriteFileAtomic(path, SerializeCheckpoint(config, model));
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  try {
    return ParseCheckpoint(ReadFile(path));
  } catch (const DataError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw DataError(path + ": " + msg);
  }
}

}  // namespace poolab
