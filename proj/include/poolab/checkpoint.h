// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint, little-endian:
//   "PLCK", u32 version, u32 config length, config JSON,
//   u32 tensor count, per tensor { u16 name length, name, u32 rank,
//   u32 dims[rank], f32 values }, u64 FNV-1a checksum of all prior bytes.

#ifndef POOLAB_CHECKPOINT_H_
#define POOLAB_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "poolab/config.h"
#include "poolab/pooling.h"

namespace poolab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t Fnv1a64(std::string_view bytes);

std::string SerializeCheckpoint(const RunConfig& config, const EncoderModel& model);

struct LoadedCheckpoint {
  RunConfig config;
  EncoderModel model;
  std::uint64_t checksum = 0;
};

// Throws DataError for bad magic, version, checksum, names or shapes.
LoadedCheckpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string& path, const RunConfig& config, const EncoderModel& model);
LoadedCheckpoint LoadCheckpoint(const std::string& path);

}  // namespace poolab

#endif  // POOLAB_CHECKPOINT_H_
