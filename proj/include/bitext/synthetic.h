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

#ifndef BITEXT_SYNTHETIC_H_
#define BITEXT_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "bitext/corpus.h"

namespace bitext {

// Two artificial languages related by a deterministic word-level cipher:
// every target word is the source word with its letters substituted and
// reversed. Word frequencies follow a Zipf law.
struct CipherCorpusConfig {
  size_t lexicon_size = 600;
  size_t min_words = 5;
  size_t max_words = 9;
  size_t train_pairs = 5000;
  size_t test_pairs = 1000;
  size_t mono_sentences = 5000;  // per language
  double zipf_exponent = 0.8;
  uint64_t seed = 7;
  std::string src_lang = "xa";
  std::string tgt_lang = "xb";
};

struct CipherCorpus {
  std::vector<SentencePair> train;
  std::vector<SentencePair> test;  // no sentence shared with train
  std::vector<Sentence> mono_src;
  std::vector<Sentence> mono_tgt;
  std::vector<std::string> lexicon;
};

CipherCorpus MakeCipherCorpus(const CipherCorpusConfig &config);

// Word-level cipher of a source-language sentence.
std::string CipherText(const std::string &text);

// Re-pairs round(fraction * n) randomly chosen pairs among themselves by a
// cyclic shift of their targets, so none keeps its own translation.
std::vector<SentencePair> Mispair(const std::vector<SentencePair> &pairs,
                                  double fraction, uint64_t seed);

}  // namespace bitext

#endif  // BITEXT_SYNTHETIC_H_
