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

#ifndef BITEXT_NEGATIVES_H_
#define BITEXT_NEGATIVES_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bitext/corpus.h"
#include "bitext/encoder.h"
#include "bitext/loss.h"
#include "bitext/matrix.h"

namespace bitext {

// A batch split into K equal contiguous shards, as it would be laid out
// across K accelerator cores.
struct ShardedBatch {
  std::vector<Matrix> sources;
  std::vector<Matrix> targets;
  // global_order[g] = (shard, local index) of global item g.
  std::vector<std::pair<size_t, size_t>> global_order;

  size_t num_shards() const { return sources.size(); }
  size_t size() const { return global_order.size(); }
  Matrix GatherSources() const;
  Matrix GatherTargets() const;
};

ShardedBatch ShardBatch(const Matrix &sources, const Matrix &targets,
                        size_t num_shards);

// Which columns a shard's rows are ranked against.
enum class NegativeScope {
  kBroadcast,  // every shard's items (cross-accelerator sampling)
  kLocal,      // only the shard's own items
};

// Per-item ranking terms for both directions, indexed by global item.
struct ShardedTerms {
  std::vector<double> source_to_target;
  std::vector<double> target_to_source;
};

ShardedTerms ShardedRankingTerms(const ShardedBatch &batch,
                                 const LossConfig &config,
                                 NegativeScope scope = NegativeScope::kBroadcast);

// Mean of each direction's terms in global order, summed. With the
// broadcast scope this equals BidirectionalLoss on the gathered batch.
double ShardedBidirectionalLoss(const ShardedBatch &batch,
                                const LossConfig &config,
                                NegativeScope scope = NegativeScope::kBroadcast);

inline constexpr size_t kDefaultHardNegatives = 3;

struct MinedNegative {
  Sentence sentence;
  double score = 0.0;
};

struct HardNegativeSet {
  size_t per_source = 0;
  std::map<std::string, std::vector<MinedNegative>> by_source;  // source id
};

// For each pair, the `per_source` pool sentences closest to the source under
// `weak` (cosine), skipping any sentence whose text equals the true target.
// Ties keep pool order.
HardNegativeSet MineHardNegatives(const EncoderParams &weak, const Vocab &vocab,
                                  const std::vector<SentencePair> &pairs,
                                  const std::vector<Sentence> &pool,
                                  size_t per_source, size_t max_len);

// A training batch whose source-to-target softmax also ranks every
// appended target.
struct AugmentedBatch {
  std::vector<SentencePair> pairs;
  std::vector<Sentence> extra_targets;  // H per source, in batch order
};

AugmentedBatch AugmentWithHardNegatives(const std::vector<SentencePair> &batch,
                                        const HardNegativeSet &negatives);

// Bidirectional loss on unit-norm rows with `extra` appended as global
// negative columns of the source-to-target direction only.
double AugmentedBidirectionalLoss(const Matrix &sources, const Matrix &targets,
                                  const Matrix &extra, const LossConfig &config);

}  // namespace bitext

#endif  // BITEXT_NEGATIVES_H_
