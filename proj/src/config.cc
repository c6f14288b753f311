// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/config.h"

#include <set>

#include "json.hpp"
#include "poolab/errors.h"

namespace poolab {

using nlohmann::json;

const Preset& FindPreset(std::string_view name) {
  for (const Preset& p : kPresets) {
    if (p.name == name) return p;
  }
  throw ConfigError("preset: unknown preset '" + std::string(name) +
                    "' (expected model1 .. model5)");
}

RunConfig RunConfig::FromPreset(std::string_view name) {
  const Preset& p = FindPreset(name);
  RunConfig c;
  c.preset = std::string(p.name);
  c.pooling.kind = p.pooling;
  c.model.attention = p.attention;
  return c;
}

namespace {

void CheckKeys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.count(k)) {
      throw ConfigError((where.empty() ? k : where + "." + k) + ": unknown key");
    }
  }
}

std::string Path(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

void ReadSize(const json& obj, const std::string& where, const char* key, std::size_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj[key];
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(Path(where, key) + ": must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

void ReadDouble(const json& obj, const std::string& where, const char* key, double& out) {
  if (!obj.contains(key)) return;
  if (!obj[key].is_number()) throw ConfigError(Path(where, key) + ": must be a number");
  out = obj[key].get<double>();
}

bool ReadString(const json& obj, const std::string& where, const char* key, std::string& out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_string()) throw ConfigError(Path(where, key) + ": must be a string");
  out = obj[key].get<std::string>();
  return true;
}

}  // namespace

RunConfig RunConfig::FromJson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  CheckKeys(doc, "", {"preset", "model", "pooling", "train", "paths"});

  RunConfig c;
  std::string preset;
  if (ReadString(doc, "", "preset", preset)) c = FromPreset(preset);

  if (doc.contains("model")) {
    const json& m = doc["model"];
    CheckKeys(m, "model",
              {"n_layers", "hidden_dim", "n_heads", "ffn_dim", "vocab_size", "max_seq_len",
               "attention"});
    ReadSize(m, "model", "n_layers", c.model.n_layers);
    ReadSize(m, "model", "hidden_dim", c.model.hidden_dim);
    ReadSize(m, "model", "n_heads", c.model.n_heads);
    ReadSize(m, "model", "ffn_dim", c.model.ffn_dim);
    ReadSize(m, "model", "vocab_size", c.model.vocab_size);
    ReadSize(m, "model", "max_seq_len", c.model.max_seq_len);
    std::string att;
    if (ReadString(m, "model", "attention", att)) {
      const AttentionMode mode = ParseAttentionMode(att);
      if (c.preset && mode != c.model.attention) {
        throw ConfigError("model.attention: '" + att + "' contradicts preset " + *c.preset);
      }
      c.model.attention = mode;
    }
  }
  if (doc.contains("pooling")) {
    const json& p = doc["pooling"];
    CheckKeys(p, "pooling",
              {"strategy", "latents", "inner_dim", "heads", "mlp_hidden", "out_dim",
               "latent_reduction"});
    std::string s;
    if (ReadString(p, "pooling", "strategy", s)) {
      const PoolingKind kind = ParsePoolingKind(s);
      if (c.preset && kind != c.pooling.kind) {
        throw ConfigError("pooling.strategy: '" + s + "' contradicts preset " + *c.preset);
      }
      c.pooling.kind = kind;
    }
    ReadSize(p, "pooling", "latents", c.pooling.latents);
    ReadSize(p, "pooling", "inner_dim", c.pooling.inner_dim);
    ReadSize(p, "pooling", "heads", c.pooling.heads);
    ReadSize(p, "pooling", "mlp_hidden", c.pooling.mlp_hidden);
    ReadSize(p, "pooling", "out_dim", c.pooling.out_dim);
    if (ReadString(p, "pooling", "latent_reduction", s)) {
      c.pooling.reduction = ParseLatentReduction(s);
    }
  }
  if (doc.contains("train")) {
    const json& t = doc["train"];
    CheckKeys(t, "train",
              {"learning_rate", "batch_size", "max_steps", "temperature", "seed",
               "weight_decay"});
    ReadDouble(t, "train", "learning_rate", c.train.learning_rate);
    ReadSize(t, "train", "batch_size", c.train.batch_size);
    ReadSize(t, "train", "max_steps", c.train.max_steps);
    ReadDouble(t, "train", "temperature", c.train.temperature);
    std::size_t seed = c.train.seed;
    ReadSize(t, "train", "seed", seed);
    c.train.seed = seed;
    ReadDouble(t, "train", "weight_decay", c.train.weight_decay);
  }
  if (doc.contains("paths")) {
    const json& p = doc["paths"];
    CheckKeys(p, "paths", {"data", "output"});
    ReadString(p, "paths", "data", c.paths.data);
    ReadString(p, "paths", "output", c.paths.output);
  }
  c.Validate();
  return c;
}

std::string RunConfig::ToJson() const {
  json doc;
  if (preset) doc["preset"] = *preset;
  doc["model"] = {{"n_layers", model.n_layers},       {"hidden_dim", model.hidden_dim},
                  {"n_heads", model.n_heads},         {"ffn_dim", model.ffn_dim},
                  {"vocab_size", model.vocab_size},   {"max_seq_len", model.max_seq_len},
                  {"attention", ToString(model.attention)}};
  doc["pooling"] = {{"strategy", ToString(pooling.kind)},
                    {"latents", pooling.latents},
                    {"inner_dim", pooling.inner_dim},
                    {"heads", pooling.heads},
                    {"mlp_hidden", pooling.mlp_hidden},
                    {"out_dim", pooling.out_dim},
                    {"latent_reduction", ToString(pooling.reduction)}};
  doc["train"] = {{"learning_rate", train.learning_rate},
                  {"batch_size", train.batch_size},
                  {"max_steps", train.max_steps},
                  {"temperature", train.temperature},
                  {"seed", train.seed},
                  {"weight_decay", train.weight_decay}};
  doc["paths"] = {{"data", paths.data}, {"output", paths.output}};
  return doc.dump(2) + "\n";
}

void RunConfig::Validate() const {
  if (preset) {
    const Preset& p = FindPreset(*preset);
    if (p.pooling != pooling.kind || p.attention != model.attention) {
      throw ConfigError("preset: pooling/attention differ from preset " + *preset);
    }
  }
  model.Validate();
  pooling.Validate(model);
  train.Validate();
}

}  // namespace poolab
