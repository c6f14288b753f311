// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration (JSON, strict schema) and the five named
// pooling/attention presets.

#ifndef POOLAB_CONFIG_H_
#define POOLAB_CONFIG_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "poolab/pooling.h"
#include "poolab/training.h"
#include "poolab/transformer.h"

namespace poolab {

struct Preset {
  std::string_view name;
  PoolingKind pooling;
  AttentionMode attention;
};

inline constexpr std::array<Preset, 5> kPresets{{
    {"model1", PoolingKind::kEosLast, AttentionMode::kCausal},
    {"model2", PoolingKind::kLastLayerTrainable, AttentionMode::kCausal},
    {"model3", PoolingKind::kMultiLayerTrainable, AttentionMode::kCausal},
    {"model4", PoolingKind::kLastLayerTrainable, AttentionMode::kBidirectional},
    {"model5", PoolingKind::kMultiLayerTrainable, AttentionMode::kBidirectional},
}};

// Throws ConfigError for an unknown name.
const Preset& FindPreset(std::string_view name);

struct PathsConfig {
  std::string data;
  std::string output;
  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct RunConfig {
  std::optional<std::string> preset;
  ModelConfig model;
  PoolingConfig pooling;
  TrainConfig train;
  PathsConfig paths;

  // Defaults with the preset's pooling and attention applied.
  static RunConfig FromPreset(std::string_view name);
  // Unknown keys, wrong types and invalid values throw ConfigError naming the
  // field path (for example "pooling.latents").
  static RunConfig FromJson(std::string_view text);
  // Canonical JSON with every field spelled out.
  std::string ToJson() const;
  void Validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace poolab

#endif  // POOLAB_CONFIG_H_
