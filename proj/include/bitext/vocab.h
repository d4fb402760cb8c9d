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

#ifndef BITEXT_VOCAB_H_
#define BITEXT_VOCAB_H_

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bitext/corpus.h"

namespace bitext {

inline constexpr std::string_view kContinuationMarker = "##";
inline constexpr double kDefaultSmoothingExponent = 0.3;
inline constexpr size_t kUnboundedLength = std::numeric_limits<size_t>::max();

// Subword vocabulary. Ids are dense; the five special tokens take ids 0-4.
// Word-internal pieces carry the continuation marker as a prefix.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecial = 5;

  static const std::vector<std::string> &SpecialTokens();

  Vocab();
  // `pieces` must start with the special tokens and hold no duplicates.
  explicit Vocab(std::vector<std::string> pieces);

  size_t size() const { return pieces_.size(); }
  const std::string &Piece(int id) const;
  // Piece text without the continuation marker.
  std::string_view Surface(int id) const;
  std::optional<int> Find(std::string_view piece) const;
  bool IsSpecial(int id) const { return id >= 0 && id < kNumSpecial; }
  bool IsContinuation(int id) const;

  const std::vector<std::string> &pieces() const { return pieces_; }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
};

// A tokenized sentence: [CLS] content... [SEP].
struct TokenSequence {
  std::vector<int> ids;
  std::string lang;
  size_t surface_len = 0;  // characters in the original text

  bool operator==(const TokenSequence &) const = default;
};

// Per-language occurrence weights p^alpha / p, where p is the language's
// share of all whitespace tokens. Languages with no tokens are omitted.
std::map<std::string, double> LanguageWeights(
    const std::map<std::string, int64_t> &token_counts, double alpha);

struct VocabBuildOptions {
  size_t target_size = 8000;
  double smoothing_exponent = kDefaultSmoothingExponent;
  // Fraction of (weighted) character mass the base alphabet must cover.
  double character_coverage = 1.0;
};

// Induces a vocabulary by repeatedly merging the most frequent adjacent
// piece pair, with frequencies counted under language-smoothed weights.
// Ties break lexicographically on (left, right).
Vocab BuildVocab(const std::map<std::string, std::vector<Sentence>> &corpora,
                 const VocabBuildOptions &options);

// Whitespace pre-split, then greedy longest-match-first per word. Words
// with no full segmentation become a single [UNK]. Keeps the first
// max_len - 2 content tokens.
TokenSequence Tokenize(std::string_view text, const Vocab &vocab,
                       size_t max_len, std::string_view lang = "");

std::string Detokenize(std::span<const int> ids, const Vocab &vocab);

// One piece per line; line number is the id.
void SaveVocab(std::ostream &out, const Vocab &vocab);
Vocab LoadVocab(std::istream &in);
void SaveVocabFile(const std::string &path, const Vocab &vocab);
Vocab LoadVocabFile(const std::string &path);

}  // namespace bitext

#endif  // BITEXT_VOCAB_H_
