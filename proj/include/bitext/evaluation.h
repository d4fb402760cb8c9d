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

#ifndef BITEXT_EVALUATION_H_
#define BITEXT_EVALUATION_H_

#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bitext/index.h"

namespace bitext {

// True translation pairs. Each source has at most one gold target.
struct GoldAlignment {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::set<std::string> src_universe;
  std::set<std::string> tgt_universe;

  // Builds universes from the pairs themselves.
  static GoldAlignment FromPairs(std::vector<std::pair<std::string, std::string>> pairs);
  void Validate() const;
};

// Gold TSV: src_id<TAB>tgt_id.
GoldAlignment ReadGold(std::istream &in);
GoldAlignment ReadGoldFile(const std::string &path);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
};

double F1(double precision, double recall);

// Fraction of gold sources whose top-1 neighbor in `targets` is the gold
// target.
double PrecisionAt1(const EmbeddingPool &sources, const VectorIndex &targets,
                    const GoldAlignment &gold);

struct LanguageSet {
  EmbeddingPool sources;
  EmbeddingPool targets;
  GoldAlignment gold;
};

struct TatoebaReport {
  std::map<std::string, double> accuracy;       // per language
  std::map<std::string, double> group_average;  // groups with >= 1 member present
  std::map<std::string, std::vector<std::string>> missing;  // group -> absent langs
};

// Per-language P@1 within each language's own target pool, then the
// unweighted mean per group over the member languages that are present.
TatoebaReport TatoebaAccuracy(const std::map<std::string, LanguageSet> &sets,
                              const std::map<std::string, std::vector<std::string>> &groups);

struct Candidate {
  std::string src;
  std::string tgt;
  double score = 0.0;
};

// Candidate TSV: src_id<TAB>tgt_id<TAB>score.
std::vector<Candidate> ReadCandidates(std::istream &in);
void WriteCandidates(std::ostream &out, const std::vector<Candidate> &candidates);

// Nearest-neighbor candidates: each query retrieves its top-k items. With
// `queries_are_targets` the emitted pairs are flipped so that src ids always
// come from the source side (backward search).
std::vector<Candidate> RetrieveCandidates(const EmbeddingPool &queries,
                                          const VectorIndex &index, size_t k,
                                          bool queries_are_targets = false);

// Sweeps every distinct candidate score as a threshold (predict score >= t)
// and returns the best F1; ties prefer the larger threshold.
Prf BuccBestF1(const std::vector<Candidate> &candidates, const GoldAlignment &gold);

// 1 - arccos(clamp(u . v)) / pi.
double ArccosSimilarity(std::span<const double> u, std::span<const double> v);

double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

// Pearson correlation between arccos similarities of the pairs and gold.
double StsPearson(const std::vector<std::pair<std::vector<double>, std::vector<double>>> &pairs,
                  std::span<const double> gold);

}  // namespace bitext

#endif  // BITEXT_EVALUATION_H_
