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

#include "bitext/vocab.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "bitext/error.h"
#include "bitext/utf8.h"

namespace bitext {
namespace {

constexpr size_t kMaxWordChars = 200;

bool HasMarker(std::string_view piece) {
  return piece.size() > kContinuationMarker.size() &&
         piece.substr(0, kContinuationMarker.size()) == kContinuationMarker;
}

std::string_view StripMarker(std::string_view piece) {
  return HasMarker(piece) ? piece.substr(kContinuationMarker.size()) : piece;
}

}  // namespace

const std::vector<std::string> &Vocab::SpecialTokens() {
  static const std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]",
                                                  "[SEP]", "[MASK]"};
  return tokens;
}

Vocab::Vocab() : Vocab(SpecialTokens()) {}

Vocab::Vocab(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  const auto &special = SpecialTokens();
  if (pieces_.size() < special.size() ||
      !std::equal(special.begin(), special.end(), pieces_.begin())) {
    throw DataError("vocab must start with the special tokens [PAD] [UNK] "
                    "[CLS] [SEP] [MASK]");
  }
  for (size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) {
      throw DataError("vocab: empty piece at id " + std::to_string(i));
    }
    if (!index_.emplace(pieces_[i], static_cast<int>(i)).second) {
      throw DataError("vocab: duplicate piece '" + pieces_[i] + "' at id " +
                      std::to_string(i));
    }
  }
}

const std::string &Vocab::Piece(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= pieces_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return pieces_[id];
}

std::string_view Vocab::Surface(int id) const {
  const std::string &piece = Piece(id);
  return IsSpecial(id) ? std::string_view(piece) : StripMarker(piece);
}

std::optional<int> Vocab::Find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocab::IsContinuation(int id) const {
  return !IsSpecial(id) && HasMarker(Piece(id));
}

std::map<std::string, double> LanguageWeights(
    const std::map<std::string, int64_t> &token_counts, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw UsageError("smoothing exponent must lie in (0, 1]");
  }
  double total = 0.0;
  for (const auto &[lang, count] : token_counts) total += count;
  std::map<std::string, double> weights;
  for (const auto &[lang, count] : token_counts) {
    if (count <= 0) continue;
    double share = count / total;
    weights[lang] = std::pow(share, alpha) / share;
  }
  return weights;
}

Vocab BuildVocab(const std::map<std::string, std::vector<Sentence>> &corpora,
                 const VocabBuildOptions &options) {
  if (!(options.character_coverage > 0.0 &&
        options.character_coverage <= 1.0)) {
    throw UsageError("character coverage must lie in (0, 1]");
  }

  std::map<std::string, int64_t> token_counts;
  for (const auto &[lang, sentences] : corpora) {
    int64_t &count = token_counts[lang];
    for (const Sentence &s : sentences) count += SplitWhitespace(s.text).size();
  }
  const std::map<std::string, double> weights =
      LanguageWeights(token_counts, options.smoothing_exponent);

  // Smoothed word frequencies.
  std::map<std::string, double> word_weight;
  for (const auto &[lang, sentences] : corpora) {
    auto w = weights.find(lang);
    if (w == weights.end()) continue;
    for (const Sentence &s : sentences) {
      for (std::string &word : SplitWhitespace(s.text)) {
        word_weight[std::move(word)] += w->second;
      }
    }
  }

  // Base alphabet, trimmed to the requested character coverage.
  std::map<std::string, double> char_weight;
  double char_total = 0.0;
  for (const auto &[word, weight] : word_weight) {
    for (const std::string &ch : SplitScalars(word)) {
      char_weight[ch] += weight;
      char_total += weight;
    }
  }
  std::vector<std::pair<std::string, double>> by_freq(char_weight.begin(),
                                                      char_weight.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::set<std::string> covered;
  double mass = 0.0;
  for (const auto &[ch, weight] : by_freq) {
    if (!covered.empty() && mass >= options.character_coverage * char_total) {
      break;
    }
    covered.insert(ch);
    mass += weight;
  }

  // Words as piece sequences; words with uncovered characters or excessive
  // length never tokenize and take no part in merging.
  std::vector<std::vector<std::string>> words;
  std::vector<double> weight_of;
  std::set<std::string> alphabet;
  for (const auto &[word, weight] : word_weight) {
    std::vector<std::string> chars = SplitScalars(word);
    if (chars.size() > kMaxWordChars) continue;
    bool ok = std::all_of(chars.begin(), chars.end(),
                          [&](const std::string &c) { return covered.count(c); });
    if (!ok) continue;
    for (size_t i = 1; i < chars.size(); ++i) {
      chars[i] = std::string(kContinuationMarker) + chars[i];
    }
    alphabet.insert(chars.begin(), chars.end());
    words.push_back(std::move(chars));
    weight_of.push_back(weight);
  }

  std::vector<std::string> pieces = Vocab::SpecialTokens();
  const size_t minimum = pieces.size() + alphabet.size();
  if (options.target_size < minimum) {
    throw UsageError("target vocab size " + std::to_string(options.target_size) +
                     " is below alphabet plus special tokens (" +
                     std::to_string(minimum) + ")");
  }
  pieces.insert(pieces.end(), alphabet.begin(), alphabet.end());
  std::set<std::string> present(pieces.begin(), pieces.end());

  while (pieces.size() < options.target_size) {
    std::map<std::pair<std::string, std::string>, double> pair_weight;
    for (size_t w = 0; w < words.size(); ++w) {
      const auto &symbols = words[w];
      for (size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_weight[{symbols[i], symbols[i + 1]}] += weight_of[w];
      }
    }
    if (pair_weight.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins.
    auto best = pair_weight.begin();
    for (auto it = pair_weight.begin(); it != pair_weight.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    std::string merged = left + std::string(StripMarker(right));

    for (auto &symbols : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left &&
            symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(symbols[i]));
        }
      }
      symbols = std::move(next);
    }
    if (present.insert(merged).second) pieces.push_back(merged);
  }
  return Vocab(std::move(pieces));
}

TokenSequence Tokenize(std::string_view text, const Vocab &vocab,
                       size_t max_len, std::string_view lang) {
  if (max_len < 3) throw UsageError("Tokenize: max_len must be at least 3");
  TokenSequence seq;
  seq.lang = std::string(lang);
  seq.surface_len = CountScalars(text);
  seq.ids.push_back(Vocab::kCls);

  const size_t content_limit = max_len - 2;
  std::vector<int> content;
  for (const std::string &word : SplitWhitespace(text)) {
    if (content.size() >= content_limit) break;
    std::vector<std::string> chars = SplitScalars(word);
    std::vector<int> word_ids;
    bool matched = chars.size() <= kMaxWordChars;
    size_t start = 0;
    while (matched && start < chars.size()) {
      std::optional<int> found;
      size_t end = chars.size();
      for (; end > start; --end) {
        std::string candidate =
            start > 0 ? std::string(kContinuationMarker) : std::string();
        for (size_t i = start; i < end; ++i) candidate += chars[i];
        found = vocab.Find(candidate);
        if (found.has_value() && !vocab.IsSpecial(*found)) break;
        found.reset();
      }
      if (!found.has_value()) {
        matched = false;
        break;
      }
      word_ids.push_back(*found);
      start = end;
    }
    if (!matched) word_ids.assign(1, Vocab::kUnk);
    content.insert(content.end(), word_ids.begin(), word_ids.end());
  }
  if (content.size() > content_limit) content.resize(content_limit);
  seq.ids.insert(seq.ids.end(), content.begin(), content.end());
  seq.ids.push_back(Vocab::kSep);
  return seq;
}

std::string Detokenize(std::span<const int> ids, const Vocab &vocab) {
  std::string out;
  for (int id : ids) {
    const std::string &piece = vocab.Piece(id);
    if (id == Vocab::kPad || id == Vocab::kCls || id == Vocab::kSep) continue;
    if (vocab.IsContinuation(id) && !out.empty()) {
      out += vocab.Surface(id);
      continue;
    }
    if (!out.empty()) out += ' ';
    out += vocab.IsSpecial(id) ? piece : std::string(vocab.Surface(id));
  }
  return out;
}

void SaveVocab(std::ostream &out, const Vocab &vocab) {
  for (const std::string &piece : vocab.pieces()) out << piece << '\n';
}

Vocab LoadVocab(std::istream &in) {
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  return Vocab(std::move(pieces));
}

void SaveVocabFile(const std::string &path, const Vocab &vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  SaveVocab(out, vocab);
}

Vocab LoadVocabFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return LoadVocab(in);
}

}  // namespace bitext
