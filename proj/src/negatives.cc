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

#include "bitext/negatives.h"

#include <algorithm>
#include <numeric>

#include "bitext/error.h"

namespace bitext {
namespace {

Matrix Gather(const std::vector<Matrix> &shards,
              const std::vector<std::pair<size_t, size_t>> &order) {
  Matrix out;
  for (const auto &[shard, local] : order) out.AppendRow(shards[shard].row(local));
  return out;
}

}  // namespace

Matrix ShardedBatch::GatherSources() const { return Gather(sources, global_order); }
Matrix ShardedBatch::GatherTargets() const { return Gather(targets, global_order); }

ShardedBatch ShardBatch(const Matrix &sources, const Matrix &targets,
                        size_t num_shards) {
  const size_t n = sources.rows();
  if (targets.rows() != n) throw DataError("batch sides differ in size");
  if (num_shards == 0 || n % num_shards != 0) {
    throw UsageError(std::to_string(num_shards) +
                     " shards do not evenly divide a batch of " + std::to_string(n));
  }
  const size_t per = n / num_shards;
  ShardedBatch out;
  for (size_t k = 0; k < num_shards; ++k) {
    Matrix x(per, sources.cols()), y(per, targets.cols());
    for (size_t i = 0; i < per; ++i) {
      auto xs = sources.row(k * per + i);
      auto ys = targets.row(k * per + i);
      std::copy(xs.begin(), xs.end(), x.row(i).begin());
      std::copy(ys.begin(), ys.end(), y.row(i).begin());
      out.global_order.emplace_back(k, i);
    }
    out.sources.push_back(std::move(x));
    out.targets.push_back(std::move(y));
  }
  return out;
}

ShardedTerms ShardedRankingTerms(const ShardedBatch &batch,
                                 const LossConfig &config, NegativeScope scope) {
  const size_t n = batch.size();
  if (n == 0) throw DataError("empty batch");
  ShardedTerms terms;
  terms.source_to_target.resize(n);
  terms.target_to_source.resize(n);

  // The broadcast: every shard sees all items of the other side.
  const Matrix all_sources = batch.GatherSources();
  const Matrix all_targets = batch.GatherTargets();

  std::vector<double> sims;
  for (size_t g = 0; g < n; ++g) {
    const auto [shard, local] = batch.global_order[g];
    const Matrix &own_x = batch.sources[shard];
    const Matrix &own_y = batch.targets[shard];
    const bool broadcast = scope == NegativeScope::kBroadcast;
    const Matrix &cols_y = broadcast ? all_targets : own_y;
    const Matrix &cols_x = broadcast ? all_sources : own_x;
    const size_t positive = broadcast ? g : local;

    sims.resize(cols_y.rows());
    for (size_t j = 0; j < cols_y.rows(); ++j) {
      sims[j] = Dot(own_x.row(local), cols_y.row(j));
    }
    terms.source_to_target[g] = RankingTerm(sims, positive, config);

    sims.resize(cols_x.rows());
    for (size_t j = 0; j < cols_x.rows(); ++j) {
      sims[j] = Dot(cols_x.row(j), own_y.row(local));
    }
    terms.target_to_source[g] = RankingTerm(sims, positive, config);
  }
  return terms;
}

double ShardedBidirectionalLoss(const ShardedBatch &batch,
                                const LossConfig &config, NegativeScope scope) {
  ShardedTerms terms = ShardedRankingTerms(batch, config, scope);
  const double n = static_cast<double>(batch.size());
  double forward = 0.0, backward = 0.0;
  for (double t : terms.source_to_target) forward += t;
  for (double t : terms.target_to_source) backward += t;
  return forward / n + backward / n;
}

HardNegativeSet MineHardNegatives(const EncoderParams &weak, const Vocab &vocab,
                                  const std::vector<SentencePair> &pairs,
                                  const std::vector<Sentence> &pool,
                                  size_t per_source, size_t max_len) {
  if (per_source < 1) throw UsageError("need at least one hard negative per source");
  if (pool.size() < per_source + 1) {
    throw DataError("negative pool of " + std::to_string(pool.size()) +
                    " sentences cannot supply " + std::to_string(per_source) +
                    " negatives plus the positive");
  }
  std::vector<TokenSequence> pool_tokens;
  for (const Sentence &s : pool) pool_tokens.push_back(Tokenize(s.text, vocab, max_len, s.lang));
  const Matrix pool_vectors = EncodeBatch(weak, pool_tokens);

  HardNegativeSet out;
  out.per_source = per_source;
  std::vector<size_t> order(pool.size());
  std::vector<double> scores(pool.size());
  for (const SentencePair &pair : pairs) {
    const std::vector<double> query =
        Encode(weak, Tokenize(pair.src.text, vocab, max_len, pair.src.lang));
    bool has_positive = false;
    std::vector<size_t> candidates;
    for (size_t j = 0; j < pool.size(); ++j) {
      if (pool[j].text == pair.tgt.text) {
        has_positive = true;
        continue;
      }
      scores[j] = Dot(query, pool_vectors.row(j));
      candidates.push_back(j);
    }
    if (!has_positive) {
      throw DataError("negative pool lacks the true target of pair " + pair.src.id);
    }
    if (candidates.size() < per_source) {
      throw DataError("too few distinct negatives for pair " + pair.src.id);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<MinedNegative> &mined = out.by_source[pair.src.id];
    mined.clear();
    for (size_t r = 0; r < per_source; ++r) {
      mined.push_back({pool[candidates[r]], scores[candidates[r]]});
    }
  }
  return out;
}

AugmentedBatch AugmentWithHardNegatives(const std::vector<SentencePair> &batch,
                                        const HardNegativeSet &negatives) {
  AugmentedBatch out;
  out.pairs = batch;
  if (negatives.per_source == 0) return out;
  for (const SentencePair &pair : batch) {
    auto it = negatives.by_source.find(pair.src.id);
    if (it == negatives.by_source.end() ||
        it->second.size() != negatives.per_source) {
      throw DataError("no mined negatives for source " + pair.src.id);
    }
    for (const MinedNegative &neg : it->second) out.extra_targets.push_back(neg.sentence);
  }
  return out;
}

double AugmentedBidirectionalLoss(const Matrix &sources, const Matrix &targets,
                                  const Matrix &extra, const LossConfig &config) {
  const size_t n = sources.rows();
  if (targets.rows() != n) throw DataError("batch sides differ in size");
  Matrix columns = targets;
  for (size_t j = 0; j < extra.rows(); ++j) columns.AppendRow(extra.row(j));
  const Matrix forward_sim = CosineScores(sources, columns);
  std::vector<double> forward = RankingTerms(forward_sim, config, Direction::kSourceToTarget);
  const double nn = static_cast<double>(n);
  double f = 0.0;
  for (double t : forward) f += t;
  return f / nn + AmsLoss(SimilarityMatrix(sources, targets), config,
                          Direction::kTargetToSource);
}

}  // namespace bitext
