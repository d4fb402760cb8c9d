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

#include "bitext/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "bitext/error.h"
#include "bitext/utf8.h"

namespace bitext {

GoldAlignment GoldAlignment::FromPairs(
    std::vector<std::pair<std::string, std::string>> pairs) {
  GoldAlignment gold;
  for (const auto &[s, t] : pairs) {
    gold.src_universe.insert(s);
    gold.tgt_universe.insert(t);
  }
  gold.pairs = std::move(pairs);
  gold.Validate();
  return gold;
}

void GoldAlignment::Validate() const {
  std::set<std::string> sources;
  for (const auto &[s, t] : pairs) {
    if (!src_universe.count(s)) throw DataError("gold source '" + s + "' not in universe");
    if (!tgt_universe.count(t)) throw DataError("gold target '" + t + "' not in universe");
    if (!sources.insert(s).second) {
      throw DataError("gold source '" + s + "' has more than one translation");
    }
  }
}

GoldAlignment ReadGold(std::istream &in) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = SplitFields(line, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw DataError("gold line " + std::to_string(line_no) + ": expected src_id<TAB>tgt_id");
    }
    pairs.emplace_back(f[0], f[1]);
  }
  return GoldAlignment::FromPairs(std::move(pairs));
}

GoldAlignment ReadGoldFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return ReadGold(in);
}

double F1(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double PrecisionAt1(const EmbeddingPool &sources, const VectorIndex &targets,
                    const GoldAlignment &gold) {
  if (gold.pairs.empty()) throw DataError("P@1 needs a non-empty gold alignment");
  std::unordered_map<std::string, size_t> row_of;
  for (size_t i = 0; i < sources.ids.size(); ++i) row_of[sources.ids[i]] = i;
  size_t correct = 0;
  for (const auto &[src, tgt] : gold.pairs) {
    auto it = row_of.find(src);
    if (it == row_of.end()) throw DataError("no embedding for gold source '" + src + "'");
    const std::vector<SearchHit> hits = targets.Search(sources.row(it->second), 1);
    if (!hits.empty() && hits.front().id == tgt) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.pairs.size());
}

TatoebaReport TatoebaAccuracy(
    const std::map<std::string, LanguageSet> &sets,
    const std::map<std::string, std::vector<std::string>> &groups) {
  TatoebaReport report;
  for (const auto &[lang, set] : sets) {
    VectorIndex index = VectorIndex::BuildExact(set.targets);
    report.accuracy[lang] = PrecisionAt1(set.sources, index, set.gold);
  }
  for (const auto &[group, members] : groups) {
    double sum = 0.0;
    size_t present = 0;
    for (const std::string &lang : members) {
      auto it = report.accuracy.find(lang);
      if (it == report.accuracy.end()) {
        report.missing[group].push_back(lang);
        continue;
      }
      sum += it->second;
      ++present;
    }
    if (present > 0) report.group_average[group] = sum / static_cast<double>(present);
  }
  return report;
}

std::vector<Candidate> ReadCandidates(std::istream &in) {
  std::vector<Candidate> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = SplitFields(line, '\t');
    size_t used = 0;
    double score = 0.0;
    if (f.size() == 3) {
      try {
        score = std::stod(f[2], &used);
      } catch (const std::exception &) {
        used = 0;
      }
    }
    if (f.size() != 3 || used != f[2].size() || !std::isfinite(score)) {
      throw DataError("candidate line " + std::to_string(line_no) +
                      ": expected src_id<TAB>tgt_id<TAB>finite score");
    }
    out.push_back({f[0], f[1], score});
  }
  return out;
}

void WriteCandidates(std::ostream &out, const std::vector<Candidate> &candidates) {
  for (const Candidate &c : candidates) {
    out << c.src << '\t' << c.tgt << '\t' << std::setprecision(17) << c.score << '\n';
  }
}

std::vector<Candidate> RetrieveCandidates(const EmbeddingPool &queries,
                                          const VectorIndex &index, size_t k,
                                          bool queries_are_targets) {
  std::vector<Candidate> out;
  for (size_t q = 0; q < queries.size(); ++q) {
    for (const SearchHit &hit : index.Search(queries.row(q), k)) {
      if (queries_are_targets) {
        out.push_back({hit.id, queries.ids[q], hit.score});
      } else {
        out.push_back({queries.ids[q], hit.id, hit.score});
      }
    }
  }
  return out;
}

Prf BuccBestF1(const std::vector<Candidate> &candidates, const GoldAlignment &gold) {
  if (gold.pairs.empty()) throw DataError("BUCC evaluation needs a non-empty gold set");
  std::set<std::pair<std::string, std::string>> gold_set(gold.pairs.begin(), gold.pairs.end());
  std::set<std::pair<std::string, std::string>> seen;
  for (const Candidate &c : candidates) {
    if (!std::isfinite(c.score)) throw DataError("non-finite candidate score");
    if (!seen.insert({c.src, c.tgt}).second) {
      throw DataError("duplicate candidate (" + c.src + ", " + c.tgt + ")");
    }
  }

  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return candidates[a].score > candidates[b].score;
  });

  Prf best;
  best.threshold = candidates.empty() ? INFINITY : candidates[order.front()].score;
  const double gold_size = static_cast<double>(gold_set.size());
  size_t predicted = 0, hits = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    const Candidate &c = candidates[order[i]];
    ++predicted;
    if (gold_set.count({c.src, c.tgt})) ++hits;
    // Evaluate once every candidate at this score is included.
    if (i + 1 < order.size() && candidates[order[i + 1]].score == c.score) continue;
    const double p = static_cast<double>(hits) / static_cast<double>(predicted);
    const double r = static_cast<double>(hits) / gold_size;
    const double f = F1(p, r);
    if (f > best.f1) best = {p, r, f, c.score};
  }
  return best;
}

double ArccosSimilarity(std::span<const double> u, std::span<const double> v) {
  const double cosine = std::clamp(Dot(u, v), -1.0, 1.0);
  return 1.0 - std::acos(cosine) / M_PI;
}

double PearsonCorrelation(std::span<const double> x, std::span<const double> y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) throw DataError("Pearson needs two equal series of length >= 2");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericalError("correlation undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double StsPearson(const std::vector<std::pair<std::vector<double>, std::vector<double>>> &pairs,
                  std::span<const double> gold) {
  if (pairs.size() != gold.size()) throw DataError("one gold score per pair required");
  std::vector<double> model;
  model.reserve(pairs.size());
  for (const auto &[u, v] : pairs) {
    if (u.size() != v.size()) throw DataError("embedding widths differ");
    model.push_back(ArccosSimilarity(u, v));
  }
  return PearsonCorrelation(model, gold);
}

}  // namespace bitext
