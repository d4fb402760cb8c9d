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

#include "bitext/mining.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "bitext/error.h"

namespace bitext {

void MiningConfig::Validate() const {
  if (!(similarity_threshold > -1.0 && similarity_threshold <= 1.0)) {
    throw UsageError("similarity threshold must lie in (-1, 1]");
  }
  if (!(selection_fraction > 0.0 && selection_fraction <= 1.0)) {
    throw UsageError("selection fraction must lie in (0, 1]");
  }
  if (neighbors_k < 1) throw UsageError("neighbors_k must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_len < 3) throw UsageError("max_len must be >= 3");
}

std::vector<SentencePair> Mine(const std::vector<Sentence> &sources,
                               const VectorIndex &index,
                               const std::vector<Sentence> &targets,
                               const EncoderParams &params, const Vocab &vocab,
                               const MiningConfig &config) {
  config.Validate();
  if (index.size() == 0) throw DataError("mining against an empty pool");
  if (targets.size() != index.size()) {
    throw DataError("index rows and target sentences differ in count");
  }
  std::vector<SentencePair> out;
  for (size_t start = 0; start < sources.size(); start += config.batch_size) {
    const size_t end = std::min(sources.size(), start + config.batch_size);
    std::vector<TokenSequence> batch;
    for (size_t i = start; i < end; ++i) {
      batch.push_back(Tokenize(sources[i].text, vocab, config.max_len, sources[i].lang));
    }
    const EmbeddingPool queries = EmbeddingPool::FromMatrix(EncodeBatch(params, batch), {});
    for (size_t i = start; i < end; ++i) {
      for (const SearchHit &hit : index.Search(queries.row(i - start), config.neighbors_k)) {
        if (hit.score < config.similarity_threshold) continue;
        out.push_back({sources[i], targets[hit.row], hit.score});
      }
    }
  }
  return out;
}

std::vector<SentencePair> MineCorpora(const std::vector<Sentence> &sources,
                                      const std::vector<Sentence> &targets,
                                      const EncoderParams &params, const Vocab &vocab,
                                      const MiningConfig &config,
                                      const IndexConfig *partitioned) {
  config.Validate();
  bool flip = config.query_side == QuerySide::kTarget;
  if (config.query_side == QuerySide::kAuto) flip = targets.size() < sources.size();
  const std::vector<Sentence> &queries = flip ? targets : sources;
  const std::vector<Sentence> &pool = flip ? sources : targets;
  if (pool.empty()) throw DataError("mining against an empty pool");

  std::vector<TokenSequence> tokens;
  std::vector<std::string> ids;
  for (size_t r = 0; r < pool.size(); ++r) {
    tokens.push_back(Tokenize(pool[r].text, vocab, config.max_len, pool[r].lang));
    ids.push_back(std::to_string(r));
  }
  EmbeddingPool vectors = EmbeddingPool::FromMatrix(EncodeBatch(params, tokens), std::move(ids));
  VectorIndex index = partitioned != nullptr
                          ? VectorIndex::BuildPartitioned(std::move(vectors), *partitioned)
                          : VectorIndex::BuildExact(std::move(vectors));

  std::vector<SentencePair> mined = Mine(queries, index, pool, params, vocab, config);
  if (flip) {
    for (SentencePair &p : mined) std::swap(p.src, p.tgt);
  }
  return mined;
}

std::vector<SentencePair> Dedup(const std::vector<SentencePair> &pairs) {
  std::map<std::pair<std::string, std::string>, size_t> best;
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto key = std::make_pair(pairs[i].src.text, pairs[i].tgt.text);
    auto [it, inserted] = best.emplace(key, i);
    if (!inserted && pairs[i].score.value_or(-INFINITY) >
                         pairs[it->second].score.value_or(-INFINITY)) {
      it->second = i;
    }
  }
  std::vector<bool> keep(pairs.size(), false);
  for (const auto &[key, i] : best) keep[i] = true;
  std::vector<SentencePair> out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

std::vector<SentencePair> SelectTop(const std::vector<SentencePair> &pairs,
                                    double fraction) {
  SelectionResult r = SelectByScore(
      pairs,
      [](const SentencePair &p) {
        if (!p.score.has_value()) throw DataError("unscored pair");
        return *p.score;
      },
      Selection::TopFraction(fraction));
  if (r.skipped > 0) throw DataError("top selection over unscored pairs");
  return r.pairs;
}

size_t HistogramBin(double score) {
  const double clamped = std::clamp(score, -1.0, 1.0);
  // The small offset absorbs representation error at bin edges like 0.6.
  auto bin = static_cast<int64_t>(std::floor((clamped + 1.0) / kHistogramBinWidth + 1e-9));
  return static_cast<size_t>(std::clamp<int64_t>(bin, 0, kHistogramBins - 1));
}

MiningReport BuildMiningReport(int64_t sources_processed,
                               const std::vector<SentencePair> &emitted,
                               const MiningConfig &config) {
  MiningReport report;
  report.sources_processed = sources_processed;
  report.pairs_emitted = static_cast<int64_t>(emitted.size());
  const std::vector<SentencePair> unique = Dedup(emitted);
  report.pairs_after_dedup = static_cast<int64_t>(unique.size());
  report.pairs_selected = TopFractionCount(report.pairs_after_dedup, config.selection_fraction);
  for (const SentencePair &p : emitted) {
    ++report.histogram[HistogramBin(p.score.value_or(0.0))];
  }
  return report;
}

void WriteMiningReport(std::ostream &out, const MiningReport &report) {
  out << "sources_processed=" << report.sources_processed << '\n'
      << "pairs_emitted=" << report.pairs_emitted << '\n'
      << "pairs_after_dedup=" << report.pairs_after_dedup << '\n'
      << "pairs_selected=" << report.pairs_selected << '\n';
  for (size_t b = 0; b < report.histogram.size(); ++b) {
    const double lo = -1.0 + kHistogramBinWidth * static_cast<double>(b);
    out << "histogram[" << std::fixed << std::setprecision(2) << lo << ","
        << lo + kHistogramBinWidth << ")=" << report.histogram[b] << '\n';
    out.unsetf(std::ios_base::floatfield);
  }
}

}  // namespace bitext
