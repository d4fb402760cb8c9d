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

#ifndef BITEXT_CORPUS_H_
#define BITEXT_CORPUS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bitext {

class Vocab;

struct Sentence {
  std::string id;
  std::string lang;
  std::string text;

  bool operator==(const Sentence &) const = default;
};

// An aligned pair. The score is either a similarity or an externally
// supplied quality score; it is absent for raw, unscored bitext.
struct SentencePair {
  Sentence src;
  Sentence tgt;
  std::optional<double> score;

  bool operator==(const SentencePair &) const = default;
};

struct CorpusStats {
  double unknown_token_rate = 0.0;
  double avg_token_length = 0.0;     // characters per matched piece
  double avg_sentence_length = 0.0;  // content tokens per sentence
  int64_t sentence_count = 0;

  // Raw tallies behind the averages, kept so that stats over several
  // corpora can be combined exactly.
  int64_t token_count = 0;
  int64_t unknown_count = 0;
  int64_t matched_count = 0;
  int64_t matched_chars = 0;

  bool empty() const { return sentence_count == 0; }
};

inline constexpr int kDefaultMinChars = 10;
inline constexpr int kDefaultMaxChars = 5000;
inline constexpr int64_t kDefaultPairCap = 100'000'000;
inline constexpr double kDefaultSelectionFraction = 0.2;

// Keeps lines whose length in Unicode scalars lies in [min_chars, max_chars].
std::vector<Sentence> FilterMonolingual(const std::vector<Sentence> &lines,
                                        int min_chars = kDefaultMinChars,
                                        int max_chars = kDefaultMaxChars);

enum class CapOrder {
  kByScore,     // keep the highest-scored pairs; every pair needs a score
  kInputOrder,  // keep the first pairs in input order
};

// Limits each (src_lang, tgt_lang) group to at most `cap` pairs. Survivors
// keep their input order; score ties break by input position.
std::vector<SentencePair> CapPairs(const std::vector<SentencePair> &pairs,
                                   int64_t cap = kDefaultPairCap,
                                   CapOrder order = CapOrder::kByScore);

// External pair-quality model. A scorer signals failure on a pair by
// throwing or by returning a non-finite value.
using PairScorer = std::function<double(const SentencePair &)>;

struct Selection {
  enum class Mode { kThreshold, kTopFraction };
  Mode mode = Mode::kTopFraction;
  double value = kDefaultSelectionFraction;

  static Selection Threshold(double tau) { return {Mode::kThreshold, tau}; }
  static Selection TopFraction(double f) { return {Mode::kTopFraction, f}; }
};

struct SelectionResult {
  std::vector<SentencePair> pairs;  // input order, scores replaced
  int64_t skipped = 0;              // pairs the scorer failed on
};

// Scores every pair and keeps those passing the selection. Top-fraction
// mode keeps ceil(f * n) pairs where n counts successfully scored pairs.
SelectionResult SelectByScore(const std::vector<SentencePair> &pairs,
                              const PairScorer &scorer,
                              const Selection &selection);

// Number of pairs a top-fraction selection keeps out of n.
int64_t TopFractionCount(int64_t n, double fraction);

CorpusStats ComputeCorpusStats(const std::vector<Sentence> &sentences,
                               const Vocab &vocab);

// Merges tallies of two corpora into the stats of their concatenation.
CorpusStats CombineStats(const CorpusStats &a, const CorpusStats &b);

// Monolingual text: one sentence per line with an optional "lang<TAB>"
// prefix. Ids are "<prefix><line number>" counting from 1. Empty lines are
// skipped.
std::vector<Sentence> ReadMonolingual(std::istream &in,
                                      const std::string &default_lang,
                                      const std::string &id_prefix = "");
std::vector<Sentence> ReadMonolingualFile(const std::string &path,
                                          const std::string &default_lang);

// Bilingual TSV: src_lang, tgt_lang, src_text, tgt_text[, score].
std::vector<SentencePair> ReadPairs(std::istream &in);
std::vector<SentencePair> ReadPairsFile(const std::string &path);
void WritePairs(std::ostream &out, const std::vector<SentencePair> &pairs);

// One tab-separated name=value record per language.
void WriteStatsReport(std::ostream &out, const std::string &lang,
                      const CorpusStats &stats);

}  // namespace bitext

#endif  // BITEXT_CORPUS_H_
