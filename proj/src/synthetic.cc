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

#include "bitext/synthetic.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "bitext/error.h"
#include "bitext/random.h"
#include "bitext/utf8.h"

namespace bitext {
namespace {

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";
// Letter substitution applied by the cipher (a permutation of a-z).
constexpr char kSubstitution[] = "qwertyuiopasdfghjklzxcvbnm";

std::string MakeWord(Rng &rng) {
  std::string word;
  const size_t syllables = 2 + rng.Index(2);
  for (size_t s = 0; s < syllables; ++s) {
    word += kConsonants[rng.Index(sizeof(kConsonants) - 1)];
    word += kVowels[rng.Index(sizeof(kVowels) - 1)];
  }
  return word;
}

std::string CipherWord(const std::string &word) {
  std::string out;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    char c = *it;
    out += (c >= 'a' && c <= 'z') ? kSubstitution[c - 'a'] : c;
  }
  return out;
}

class ZipfSampler {
 public:
  ZipfSampler(size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cdf_[i] = total;
    }
    for (double &c : cdf_) c /= total;
  }
  size_t Sample(Rng &rng) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), rng.Uniform());
    return std::min<size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

std::string CipherText(const std::string &text) {
  std::string out;
  for (const std::string &word : SplitWhitespace(text)) {
    if (!out.empty()) out += ' ';
    out += CipherWord(word);
  }
  return out;
}

CipherCorpus MakeCipherCorpus(const CipherCorpusConfig &config) {
  if (config.lexicon_size < 2 || config.min_words < 1 ||
      config.max_words < config.min_words) {
    throw UsageError("invalid cipher corpus config");
  }
  Rng rng(config.seed);
  CipherCorpus corpus;
  std::set<std::string> words;
  while (corpus.lexicon.size() < config.lexicon_size) {
    std::string w = MakeWord(rng);
    if (words.insert(w).second) corpus.lexicon.push_back(w);
  }
  const ZipfSampler zipf(config.lexicon_size, config.zipf_exponent);

  std::set<std::string> used;
  auto fresh_sentence = [&]() {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const size_t len =
          config.min_words + rng.Index(config.max_words - config.min_words + 1);
      std::string text;
      for (size_t i = 0; i < len; ++i) {
        if (i > 0) text += ' ';
        text += corpus.lexicon[zipf.Sample(rng)];
      }
      if (used.insert(text).second) return text;
    }
    throw UsageError("cipher corpus config cannot produce enough distinct sentences");
  };

  auto make_pairs = [&](size_t count, const std::string &prefix) {
    std::vector<SentencePair> pairs;
    for (size_t i = 0; i < count; ++i) {
      const std::string text = fresh_sentence();
      const std::string id = prefix + std::to_string(i);
      pairs.push_back({{id, config.src_lang, text},
                       {id, config.tgt_lang, CipherText(text)},
                       std::nullopt});
    }
    return pairs;
  };
  corpus.train = make_pairs(config.train_pairs, "train");
  corpus.test = make_pairs(config.test_pairs, "test");
  for (size_t i = 0; i < config.mono_sentences; ++i) {
    corpus.mono_src.push_back(
        {"mono-" + config.src_lang + std::to_string(i), config.src_lang, fresh_sentence()});
  }
  for (size_t i = 0; i < config.mono_sentences; ++i) {
    corpus.mono_tgt.push_back({"mono-" + config.tgt_lang + std::to_string(i),
                               config.tgt_lang, CipherText(fresh_sentence())});
  }
  return corpus;
}

std::vector<SentencePair> Mispair(const std::vector<SentencePair> &pairs,
                                  double fraction, uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw UsageError("fraction must lie in [0, 1]");
  const size_t n = pairs.size();
  const auto count = static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<size_t> chosen(n);
  for (size_t i = 0; i < n; ++i) chosen[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) std::swap(chosen[i], chosen[i + rng.Index(n - i)]);
  chosen.resize(count);
  std::sort(chosen.begin(), chosen.end());

  std::vector<SentencePair> out = pairs;
  if (count < 2) return out;
  for (size_t i = 0; i < count; ++i) {
    out[chosen[i]].tgt = pairs[chosen[(i + 1) % count]].tgt;
  }
  return out;
}

}  // namespace bitext
