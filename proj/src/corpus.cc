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

#include "bitext/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bitext/error.h"
#include "bitext/utf8.h"
#include "bitext/vocab.h"

namespace bitext {

std::vector<Sentence> FilterMonolingual(const std::vector<Sentence> &lines,
                                        int min_chars, int max_chars) {
  if (min_chars < 0 || max_chars <= min_chars) {
    throw UsageError("FilterMonolingual: need 0 <= min_chars < max_chars");
  }
  std::vector<Sentence> kept;
  for (const Sentence &line : lines) {
    size_t n = CountScalars(line.text);
    if (n >= static_cast<size_t>(min_chars) &&
        n <= static_cast<size_t>(max_chars)) {
      kept.push_back(line);
    }
  }
  return kept;
}

std::vector<SentencePair> CapPairs(const std::vector<SentencePair> &pairs,
                                   int64_t cap, CapOrder order) {
  if (cap <= 0) throw UsageError("CapPairs: cap must be positive");
  if (order == CapOrder::kByScore) {
    for (const SentencePair &p : pairs) {
      if (!p.score.has_value()) {
        throw DataError("CapPairs: score-based capping needs scored pairs (" +
                        p.src.id + ", " + p.tgt.id + ")");
      }
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<size_t>> groups;
  for (size_t i = 0; i < pairs.size(); ++i) {
    groups[{pairs[i].src.lang, pairs[i].tgt.lang}].push_back(i);
  }

  std::vector<bool> keep(pairs.size(), false);
  for (auto &[key, members] : groups) {
    if (order == CapOrder::kByScore) {
      std::stable_sort(members.begin(), members.end(), [&](size_t a, size_t b) {
        return *pairs[a].score > *pairs[b].score;
      });
    }
    size_t n = std::min<size_t>(members.size(), static_cast<size_t>(cap));
    for (size_t i = 0; i < n; ++i) keep[members[i]] = true;
  }

  std::vector<SentencePair> out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

int64_t TopFractionCount(int64_t n, double fraction) {
  if (n <= 0) return 0;
  double exact = fraction * static_cast<double>(n);
  // Absorb representation error so that e.g. 0.2 * 15 keeps 3, not 4.
  auto k = static_cast<int64_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<int64_t>(k, 1, n);
}

SelectionResult SelectByScore(const std::vector<SentencePair> &pairs,
                              const PairScorer &scorer,
                              const Selection &selection) {
  if (selection.mode == Selection::Mode::kThreshold) {
    if (!std::isfinite(selection.value)) {
      throw UsageError("SelectByScore: threshold must be finite");
    }
  } else if (!(selection.value > 0.0 && selection.value <= 1.0)) {
    throw UsageError("SelectByScore: fraction must lie in (0, 1]");
  }

  SelectionResult result;
  std::vector<SentencePair> scored;
  for (const SentencePair &pair : pairs) {
    double score;
    try {
      score = scorer(pair);
    } catch (const std::exception &) {
      ++result.skipped;
      continue;
    }
    if (!std::isfinite(score)) {
      ++result.skipped;
      continue;
    }
    SentencePair copy = pair;
    copy.score = score;
    scored.push_back(std::move(copy));
  }

  if (selection.mode == Selection::Mode::kThreshold) {
    for (SentencePair &p : scored) {
      if (*p.score >= selection.value) result.pairs.push_back(std::move(p));
    }
    return result;
  }

  std::vector<size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return *scored[a].score > *scored[b].score;
  });
  int64_t k = TopFractionCount(static_cast<int64_t>(scored.size()),
                               selection.value);
  std::vector<bool> keep(scored.size(), false);
  for (int64_t i = 0; i < k; ++i) keep[order[i]] = true;
  for (size_t i = 0; i < scored.size(); ++i) {
    if (keep[i]) result.pairs.push_back(std::move(scored[i]));
  }
  return result;
}

namespace {

CorpusStats Finalize(CorpusStats s) {
  if (s.sentence_count == 0) {
    return CorpusStats{};
  }
  s.unknown_token_rate =
      s.token_count == 0 ? 0.0
                         : static_cast<double>(s.unknown_count) / s.token_count;
  s.avg_token_length =
      s.matched_count == 0
          ? 0.0
          : static_cast<double>(s.matched_chars) / s.matched_count;
  s.avg_sentence_length =
      static_cast<double>(s.token_count) / s.sentence_count;
  return s;
}

}  // namespace

CorpusStats ComputeCorpusStats(const std::vector<Sentence> &sentences,
                               const Vocab &vocab) {
  CorpusStats stats;
  for (const Sentence &sentence : sentences) {
    TokenSequence seq = Tokenize(sentence.text, vocab, kUnboundedLength);
    ++stats.sentence_count;
    for (int id : seq.ids) {
      if (vocab.IsSpecial(id) && id != Vocab::kUnk) continue;
      ++stats.token_count;
      if (id == Vocab::kUnk) {
        ++stats.unknown_count;
      } else {
        ++stats.matched_count;
        stats.matched_chars +=
            static_cast<int64_t>(CountScalars(vocab.Surface(id)));
      }
    }
  }
  return Finalize(stats);
}

CorpusStats CombineStats(const CorpusStats &a, const CorpusStats &b) {
  CorpusStats s;
  s.sentence_count = a.sentence_count + b.sentence_count;
  s.token_count = a.token_count + b.token_count;
  s.unknown_count = a.unknown_count + b.unknown_count;
  s.matched_count = a.matched_count + b.matched_count;
  s.matched_chars = a.matched_chars + b.matched_chars;
  return Finalize(s);
}

std::vector<Sentence> ReadMonolingual(std::istream &in,
                                      const std::string &default_lang,
                                      const std::string &id_prefix) {
  std::vector<Sentence> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Sentence s;
    s.id = id_prefix + std::to_string(line_no);
    s.lang = default_lang;
    size_t tab = line.find('\t');
    if (tab != std::string::npos) {
      s.lang = line.substr(0, tab);
      s.text = line.substr(tab + 1);
    } else {
      s.text = line;
    }
    if (s.lang.empty()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": missing language tag");
    }
    if (s.text.empty()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> ReadMonolingualFile(const std::string &path,
                                          const std::string &default_lang) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return ReadMonolingual(in, default_lang);
}

std::vector<SentencePair> ReadPairs(std::istream &in) {
  std::vector<SentencePair> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitFields(line, '\t');
    if (fields.size() != 4 && fields.size() != 5) {
      throw DataError("pairs line " + std::to_string(line_no) +
                      ": expected 4 or 5 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    SentencePair p;
    std::string id = std::to_string(line_no);
    p.src = {id, fields[0], fields[2]};
    p.tgt = {id, fields[1], fields[3]};
    if (p.src.lang.empty() || p.tgt.lang.empty()) {
      throw DataError("pairs line " + std::to_string(line_no) +
                      ": empty language tag");
    }
    if (fields.size() == 5 && !fields[4].empty()) {
      size_t used = 0;
      double score = 0.0;
      try {
        score = std::stod(fields[4], &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != fields[4].size() || !std::isfinite(score)) {
        throw DataError("pairs line " + std::to_string(line_no) +
                        ": bad score '" + fields[4] + "'");
      }
      p.score = score;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SentencePair> ReadPairsFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return ReadPairs(in);
}

void WritePairs(std::ostream &out, const std::vector<SentencePair> &pairs) {
  for (const SentencePair &p : pairs) {
    out << p.src.lang << '\t' << p.tgt.lang << '\t' << p.src.text << '\t'
        << p.tgt.text;
    if (p.score.has_value()) {
      out << '\t' << std::fixed << std::setprecision(6) << *p.score;
      out.unsetf(std::ios_base::floatfield);
    }
    out << '\n';
  }
}

void WriteStatsReport(std::ostream &out, const std::string &lang,
                      const CorpusStats &stats) {
  std::ostringstream line;
  line << std::setprecision(10);
  line << "lang=" << lang << "\tsentence_count=" << stats.sentence_count
       << "\ttoken_count=" << stats.token_count
       << "\tunknown_token_rate=" << stats.unknown_token_rate
       << "\tavg_token_length=" << stats.avg_token_length
       << "\tavg_sentence_length=" << stats.avg_sentence_length;
  if (stats.empty()) line << "\tempty=1";
  out << line.str() << '\n';
}

}  // namespace bitext
