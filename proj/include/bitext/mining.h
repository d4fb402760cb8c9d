// Copyright 2026 The Bitext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BITEXT_MINING_H_
#define BITEXT_MINING_H_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bitext/corpus.h"
#include "bitext/encoder.h"
#include "bitext/index.h"
#include "bitext/vocab.h"

namespace bitext {

inline constexpr double kDefaultMiningThreshold = 0.6;
inline constexpr double kHistogramBinWidth = 0.05;
inline constexpr size_t kHistogramBins = 40;  // [-1, 1]

enum class QuerySide {
  kSource,  // source sentences query a target index
  kTarget,  // target sentences query a source index
  kAuto,    // the smaller side queries
};

struct MiningConfig {
  double similarity_threshold = kDefaultMiningThreshold;
  size_t neighbors_k = 1;
  double selection_fraction = kDefaultSelectionFraction;
  QuerySide query_side = QuerySide::kAuto;
  size_t batch_size = 256;  // sources encoded per search round
  size_t max_len = 64;

  void Validate() const;
};

// Encodes `sources` in batches and keeps each retrieved neighbor whose
// cosine is >= the threshold. `targets[r]` is the sentence of index row r.
// Output follows source input order, then neighbor rank.
std::vector<SentencePair> Mine(const std::vector<Sentence> &sources,
                               const VectorIndex &index,
                               const std::vector<Sentence> &targets,
                               const EncoderParams &params, const Vocab &vocab,
                               const MiningConfig &config);

// Builds the index over one side (chosen by config.query_side) and mines
// with the other. Pairs always read source-side first.
std::vector<SentencePair> MineCorpora(const std::vector<Sentence> &sources,
                                      const std::vector<Sentence> &targets,
                                      const EncoderParams &params, const Vocab &vocab,
                                      const MiningConfig &config,
                                      const IndexConfig *partitioned = nullptr);

// Drops repeated (src_text, tgt_text) pairs, keeping the highest-scored
// instance (the earliest one among equals) in place.
std::vector<SentencePair> Dedup(const std::vector<SentencePair> &pairs);

// Keeps the ceil(fraction * n) best-scored pairs, in input order.
std::vector<SentencePair> SelectTop(const std::vector<SentencePair> &pairs,
                                    double fraction);

struct MiningReport {
  int64_t sources_processed = 0;
  int64_t pairs_emitted = 0;
  int64_t pairs_after_dedup = 0;
  int64_t pairs_selected = 0;
  std::vector<int64_t> histogram = std::vector<int64_t>(kHistogramBins, 0);

  bool operator==(const MiningReport &) const = default;
};

size_t HistogramBin(double score);

// Summarizes a mining run from its emitted (pre-dedup) pairs.
MiningReport BuildMiningReport(int64_t sources_processed,
                               const std::vector<SentencePair> &emitted,
                               const MiningConfig &config);

// metric=value lines.
void WriteMiningReport(std::ostream &out, const MiningReport &report);

}  // namespace bitext

#endif  // BITEXT_MINING_H_
