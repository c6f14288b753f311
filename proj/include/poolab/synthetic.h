// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Token-template corpus of K topical clusters for desk-scale training and
// evaluation.
//
// Each cluster owns a set of pseudo-words; neighbouring clusters on a ring
// share a few of them, so cluster c + 1 is the nearest other cluster of c
// and supplies the hard negatives. Sentences draw topic words from one
// cluster and filler words from a common pool, with lengths independent of
// the cluster.

#ifndef POOLAB_SYNTHETIC_H_
#define POOLAB_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "poolab/evaltasks.h"
#include "poolab/training.h"

namespace poolab {

struct SyntheticOptions {
  std::size_t clusters = 8;
  std::size_t size = 2000;  // training examples
  std::uint64_t seed = 0;

  void Validate() const;  // throws ConfigError
};

struct SyntheticSample {
  TrainingExample example;
  std::size_t query_cluster = 0;
  std::size_t positive_cluster = 0;
  std::size_t negative_cluster = 0;
};

struct SyntheticSuite {
  std::vector<SyntheticSample> train;
  StsDataset sts;       // second sentence mixes in a distant cluster
  StsDataset sts_near;  // second sentence mixes in the neighbouring cluster
  RetrievalDataset retrieval;
  LabeledDataset classification_train;
  LabeledDataset classification_test;
  LabeledDataset clustering;
};

SyntheticSuite GenerateSynthetic(const SyntheticOptions& options);

// Writes <dir>/train.jsonl and <dir>/eval/{sts,sts-near,retrieval,
// classification,clustering}/ in the dataset file layout.
void WriteSyntheticSuite(const std::string& dir, const SyntheticSuite& suite);

}  // namespace poolab

#endif  // POOLAB_SYNTHETIC_H_
