// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/synthetic.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "json.hpp"
#include "poolab/errors.h"
#include "poolab/io.h"
#include "poolab/rng.h"

namespace poolab {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticOptions::Validate() const {
  if (clusters < 2) throw ConfigError("clusters: must be at least 2");
  if (size < clusters) {
    throw ConfigError("size: must be at least the number of clusters (" +
                      std::to_string(clusters) + ")");
  }
}

namespace {

constexpr std::size_t kOwnWords = 10;
constexpr std::size_t kSharedWords = 3;
constexpr std::size_t kStsPairs = 400;
constexpr std::size_t kQueriesPerCluster = 8;
constexpr std::size_t kDocsPerCluster = 24;
constexpr std::size_t kClassTrainPerCluster = 40;
constexpr std::size_t kClassTestPerCluster = 20;
constexpr std::size_t kClusterPointsPerCluster = 30;

const std::vector<std::string>& Fillers() {
  static const std::vector<std::string> kWords = {
      "the", "a", "of", "and", "to", "in", "is", "with", "for", "on",
      "about", "this", "that", "some", "more", "very", "from", "by", "as", "it",
      "we", "they", "was", "are", "be", "or", "an", "at", "so", "its"};
  return kWords;
}

class Generator {
 public:
  Generator(std::size_t k, std::uint64_t seed) : k_(k), rng_(seed) {
    std::set<std::string> used(Fillers().begin(), Fillers().end());
    own_.resize(k);
    shared_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < kOwnWords; ++i) own_[c].push_back(NewWord(used));
      for (std::size_t i = 0; i < kSharedWords; ++i) shared_[c].push_back(NewWord(used));
    }
  }

  std::size_t k() const { return k_; }
  Rng& rng() { return rng_; }

  // Own words plus the words shared with both ring neighbours.
  std::vector<std::string> Topic(std::size_t c) const {
    std::vector<std::string> t = own_[c];
    t.insert(t.end(), shared_[c].begin(), shared_[c].end());
    const std::size_t prev = (c + k_ - 1) % k_;
    t.insert(t.end(), shared_[prev].begin(), shared_[prev].end());
    return t;
  }

  std::string Sentence(std::size_t c, std::size_t lo, std::size_t hi, std::size_t fill_lo,
                       std::size_t fill_hi) {
    std::vector<std::string> words = Pick(Topic(c), Count(lo, hi));
    AddFillers(words, Count(fill_lo, fill_hi));
    return Join(words);
  }

  // T = 4m topic words, m * grade of them own words of `c` and the rest own
  // words of `other`, so the shared fraction is exactly grade / 4.
  std::string Mixed(std::size_t c, std::size_t other, int grade) {
    const std::size_t m = Count(1, 2);
    const std::size_t t = 4 * m;
    const std::size_t same = m * static_cast<std::size_t>(grade);
    std::vector<std::string> words = Pick(own_[c], same);
    const std::vector<std::string> rest = Pick(own_[other], t - same);
    words.insert(words.end(), rest.begin(), rest.end());
    AddFillers(words, Count(1, 4));
    return Join(words);
  }

  std::string PureOwn(std::size_t c) {
    std::vector<std::string> words = Pick(own_[c], Count(4, 8));
    AddFillers(words, Count(1, 4));
    return Join(words);
  }

 private:
  std::size_t Count(std::size_t lo, std::size_t hi) {
    return static_cast<std::size_t>(rng_.Int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
  }

  std::string NewWord(std::set<std::string>& used) {
    static const std::string kCons = "bdfgklmnprstvz";
    static const std::string kVow = "aeiou";
    for (;;) {
      std::string w;
      const std::size_t syl = Count(2, 3);
      for (std::size_t s = 0; s < syl; ++s) {
        w += kCons[rng_.Index(kCons.size())];
        w += kVow[rng_.Index(kVow.size())];
      }
      if (used.insert(w).second) return w;
    }
  }

  // n distinct entries of `pool` in random order.
  std::vector<std::string> Pick(std::vector<std::string> pool, std::size_t n) {
    rng_.Shuffle(pool.begin(), pool.end());
    pool.resize(std::min(n, pool.size()));
    return pool;
  }

  void AddFillers(std::vector<std::string>& words, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) words.push_back(Fillers()[rng_.Index(Fillers().size())]);
    rng_.Shuffle(words.begin(), words.end());
  }

  static std::string Join(const std::vector<std::string>& words) {
    std::string s;
    for (const std::string& w : words) {
      if (!s.empty()) s += ' ';
      s += w;
    }
    return s;
  }

  std::size_t k_;
  Rng rng_;
  std::vector<std::vector<std::string>> own_, shared_;
};

std::string Label(std::size_t c) { return "topic" + std::to_string(c); }

StsDataset MakeSts(Generator& g, std::size_t offset) {
  StsDataset d;
  for (std::size_t i = 0; i < kStsPairs; ++i) {
    const std::size_t c = g.rng().Index(g.k());
    const int grade = static_cast<int>(i % 5);
    d.pairs.push_back({g.PureOwn(c), g.Mixed(c, (c + offset) % g.k(), grade),
                       static_cast<double>(grade)});
  }
  return d;
}

LabeledDataset MakeLabeled(Generator& g, std::size_t per_cluster) {
  LabeledDataset d;
  for (std::size_t i = 0; i < per_cluster * g.k(); ++i) {
    const std::size_t c = i % g.k();
    d.items.push_back({g.Sentence(c, 4, 8, 1, 5), Label(c)});
  }
  return d;
}

}  // namespace

SyntheticSuite GenerateSynthetic(const SyntheticOptions& options) {
  options.Validate();
  Generator g(options.clusters, options.seed);
  const std::size_t k = options.clusters;
  SyntheticSuite s;
  for (std::size_t i = 0; i < options.size; ++i) {
    const std::size_t c = g.rng().Index(k);
    const std::size_t neg = (c + 1) % k;
    SyntheticSample smp;
    smp.example.instruction =
        std::string(g.rng().Bernoulli(0.5) ? kRetrievalInstruction : kStsInstruction);
    smp.example.query = g.Sentence(c, 3, 6, 0, 2);
    smp.example.positive = g.Sentence(c, 4, 8, 1, 5);
    smp.example.hard_negative = g.Sentence(neg, 4, 8, 1, 5);
    smp.query_cluster = smp.positive_cluster = c;
    smp.negative_cluster = neg;
    s.train.push_back(std::move(smp));
  }
  s.sts = MakeSts(g, std::max<std::size_t>(1, k / 2));
  s.sts_near = MakeSts(g, 1);

  for (std::size_t c = 0, q = 0, d = 0; c < k; ++c) {
    for (std::size_t i = 0; i < kDocsPerCluster; ++i, ++d) {
      s.retrieval.corpus.push_back({"d" + std::to_string(d), g.Sentence(c, 4, 8, 1, 5)});
    }
    for (std::size_t i = 0; i < kQueriesPerCluster; ++i, ++q) {
      const std::string qid = "q" + std::to_string(q);
      s.retrieval.queries.push_back({qid, g.Sentence(c, 3, 6, 0, 2)});
      for (std::size_t j = 0; j < kDocsPerCluster; ++j) {
        s.retrieval.qrels[qid]["d" + std::to_string(c * kDocsPerCluster + j)] = 1.0;
      }
    }
  }
  s.classification_train = MakeLabeled(g, kClassTrainPerCluster);
  s.classification_test = MakeLabeled(g, kClassTestPerCluster);
  s.clustering = MakeLabeled(g, kClusterPointsPerCluster);
  return s;
}

namespace {

std::string Lines(const std::vector<json>& rows) {
  std::string out;
  for (const json& r : rows) out += r.dump() + "\n";
  return out;
}

std::string StsLines(const StsDataset& d) {
  std::vector<json> rows;
  for (const StsPair& p : d.pairs) {
    rows.push_back({{"sentence1", p.sentence1}, {"sentence2", p.sentence2}, {"score", p.score}});
  }
  return Lines(rows);
}

std::string LabeledLines(const LabeledDataset& d) {
  std::vector<json> rows;
  for (const LabeledText& t : d.items) rows.push_back({{"text", t.text}, {"label", t.label}});
  return Lines(rows);
}

std::string IdLines(const std::vector<IdText>& v) {
  std::vector<json> rows;
  for (const IdText& t : v) rows.push_back({{"id", t.id}, {"text", t.text}});
  return Lines(rows);
}

}  // namespace

void WriteSyntheticSuite(const std::string& dir, const SyntheticSuite& suite) {
  const fs::path root(dir), ev = root / "eval";
  std::vector<json> train;
  for (const SyntheticSample& s : suite.train) {
    train.push_back({{"instruction", s.example.instruction},
                     {"query", s.example.query},
                     {"positive", s.example.positive},
                     {"negative", s.example.hard_negative},
                     {"query_cluster", s.query_cluster},
                     {"positive_cluster", s.positive_cluster},
                     {"negative_cluster", s.negative_cluster}});
  }
  WriteFileAtomic((root / "train.jsonl").string(), Lines(train));
  WriteFileAtomic((ev / "sts" / "pairs.jsonl").string(), StsLines(suite.sts));
  WriteFileAtomic((ev / "sts-near" / "pairs.jsonl").string(), StsLines(suite.sts_near));
  WriteFileAtomic((ev / "retrieval" / "corpus.jsonl").string(), IdLines(suite.retrieval.corpus));
  WriteFileAtomic((ev / "retrieval" / "queries.jsonl").string(), IdLines(suite.retrieval.queries));
  std::string qrels;
  for (const auto& [qid, docs] : suite.retrieval.qrels) {
    for (const auto& [did, grade] : docs) {
      qrels += qid + "\t" + did + "\t" + std::to_string(static_cast<int>(grade)) + "\n";
    }
  }
  WriteFileAtomic((ev / "retrieval" / "qrels.tsv").string(), qrels);
  WriteFileAtomic((ev / "classification" / "train.jsonl").string(),
                  LabeledLines(suite.classification_train));
  WriteFileAtomic((ev / "classification" / "test.jsonl").string(),
                  LabeledLines(suite.classification_test));
  WriteFileAtomic((ev / "clustering" / "data.jsonl").string(), LabeledLines(suite.clustering));
}

}  // namespace poolab
