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

#include "bitext/index.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "bitext/binary_io.h"
#include "bitext/error.h"
#include "bitext/random.h"

namespace bitext {
namespace {

constexpr double kUnitTolerance = 1e-3;

// Better hit first: higher score, then smaller id.
bool Ranks(const SearchHit &a, const SearchHit &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

std::vector<float> ToUnitFloat(std::span<const double> v) {
  double norm = std::sqrt(Dot(v, v));
  std::vector<float> out(v.size());
  for (size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(v[k] / norm);
  return out;
}

}  // namespace

double DotF(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

EmbeddingPool EmbeddingPool::FromMatrix(const Matrix &m, std::vector<std::string> ids) {
  if (!ids.empty() && ids.size() != m.rows()) {
    throw DataError("pool has " + std::to_string(m.rows()) + " rows but " +
                    std::to_string(ids.size()) + " ids");
  }
  EmbeddingPool pool;
  pool.dim = m.cols();
  pool.values.reserve(m.size());
  for (double v : m.values()) pool.values.push_back(static_cast<float>(v));
  pool.ids = std::move(ids);
  return pool;
}

void WritePoolVectors(std::ostream &out, const EmbeddingPool &pool) {
  out << pool.size() << ' ' << pool.dim << '\n';
  for (float v : pool.values) WriteF32(out, v);
}

EmbeddingPool ReadPoolVectors(std::istream &in) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("pool file: missing header line");
  std::istringstream parse(header);
  uint64_t rows = 0, dim = 0;
  std::string rest;
  if (!(parse >> rows >> dim) || (parse >> rest) || dim == 0 ||
      dim > (uint64_t{1} << 20) || rows > (uint64_t{1} << 40) / dim) {
    throw DataError("pool file: bad header '" + header + "'");
  }
  EmbeddingPool pool;
  pool.dim = dim;
  pool.values.resize(rows * dim);
  BinaryReader reader(in);
  for (float &v : pool.values) v = reader.ReadF32("pool vector");
  reader.ExpectEnd();
  return pool;
}

void WriteIds(std::ostream &out, const std::vector<std::string> &ids) {
  for (const std::string &id : ids) out << id << '\n';
}

std::vector<std::string> ReadIds(std::istream &in) {
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(line);
  }
  return ids;
}

void SavePool(const std::string &stem, const EmbeddingPool &pool) {
  std::ofstream vectors(stem + ".f32", std::ios::binary);
  std::ofstream ids(stem + ".ids");
  if (!vectors || !ids) throw DataError("cannot write pool " + stem);
  WritePoolVectors(vectors, pool);
  WriteIds(ids, pool.ids);
}

EmbeddingPool LoadPool(const std::string &stem) {
  std::ifstream vectors(stem + ".f32", std::ios::binary);
  if (!vectors) throw DataError("cannot open " + stem + ".f32");
  EmbeddingPool pool = ReadPoolVectors(vectors);
  std::ifstream ids(stem + ".ids");
  if (!ids) throw DataError("cannot open " + stem + ".ids");
  pool.ids = ReadIds(ids);
  if (pool.ids.size() != pool.size()) {
    throw DataError(stem + ": " + std::to_string(pool.size()) + " vectors but " +
                    std::to_string(pool.ids.size()) + " ids");
  }
  return pool;
}

void VectorIndex::Validate() const {
  const size_t m = pool_.size();
  if (pool_.ids.size() != m) throw DataError("index needs one id per vector");
  std::set<std::string> seen;
  for (const std::string &id : pool_.ids) {
    if (!seen.insert(id).second) throw DataError("duplicate id '" + id + "' in index");
  }
  for (size_t i = 0; i < m; ++i) {
    double norm = std::sqrt(DotF(pool_.row(i), pool_.row(i)));
    if (!(std::abs(norm - 1.0) <= kUnitTolerance)) {
      throw DataError("index vector " + pool_.ids[i] + " is not unit norm (" +
                      std::to_string(norm) + ")");
    }
  }
}

VectorIndex VectorIndex::BuildExact(EmbeddingPool pool) {
  VectorIndex index;
  index.mode_ = IndexMode::kExact;
  index.pool_ = std::move(pool);
  index.Validate();
  return index;
}

VectorIndex VectorIndex::BuildPartitioned(EmbeddingPool pool, const IndexConfig &config) {
  VectorIndex index;
  index.mode_ = IndexMode::kPartitioned;
  index.pool_ = std::move(pool);
  index.Validate();
  const size_t m = index.pool_.size();
  const size_t d = index.pool_.dim;
  const size_t c = config.clusters;
  if (c < 1 || config.probes < 1) throw UsageError("clusters and probes must be >= 1");
  if (m < c) {
    throw DataError("cannot partition " + std::to_string(m) + " vectors into " +
                    std::to_string(c) + " clusters");
  }
  const EmbeddingPool &p = index.pool_;

  // Farthest-point seeding from a seeded random first row.
  Rng rng(config.seed);
  std::vector<size_t> seeds = {static_cast<size_t>(rng.Index(m))};
  std::vector<double> closest(m, -INFINITY);
  while (seeds.size() < c) {
    const auto last = p.row(seeds.back());
    size_t far = 0;
    for (size_t i = 0; i < m; ++i) {
      closest[i] = std::max(closest[i], DotF(p.row(i), last));
      if (closest[i] < closest[far]) far = i;
    }
    seeds.push_back(far);
  }
  Matrix centroids(c, d);
  for (size_t j = 0; j < c; ++j) {
    auto src = p.row(seeds[j]);
    for (size_t k = 0; k < d; ++k) centroids(j, k) = src[k];
  }

  std::vector<size_t> assign(m, 0);
  std::vector<double> assigned_sim(m, 0.0);
  auto assign_rows = [&](const Matrix &cents) {
    std::vector<float> cf(cents.values().begin(), cents.values().end());
    for (size_t i = 0; i < m; ++i) {
      size_t best = 0;
      double best_sim = -INFINITY;
      for (size_t j = 0; j < c; ++j) {
        double s = DotF(p.row(i), std::span<const float>(cf.data() + j * d, d));
        if (s > best_sim) {
          best_sim = s;
          best = j;
        }
      }
      assign[i] = best;
      assigned_sim[i] = best_sim;
    }
  };

  for (int iter = 0; iter < config.kmeans_iters; ++iter) {
    assign_rows(centroids);
    std::vector<size_t> counts(c, 0);
    Matrix sums(c, d);
    for (size_t i = 0; i < m; ++i) {
      ++counts[assign[i]];
      auto row = p.row(i);
      auto dst = sums.row(assign[i]);
      for (size_t k = 0; k < d; ++k) dst[k] += row[k];
    }
    // Re-seed empty clusters from the farthest member of the largest one.
    for (size_t j = 0; j < c; ++j) {
      if (counts[j] > 0) continue;
      size_t largest = std::max_element(counts.begin(), counts.end()) - counts.begin();
      if (counts[largest] < 2) break;
      size_t far = m;
      for (size_t i = 0; i < m; ++i) {
        if (assign[i] == largest && (far == m || assigned_sim[i] < assigned_sim[far])) {
          far = i;
        }
      }
      auto row = p.row(far);
      auto from = sums.row(largest);
      auto to = sums.row(j);
      for (size_t k = 0; k < d; ++k) {
        from[k] -= row[k];
        to[k] = row[k];
      }
      assign[far] = j;
      assigned_sim[far] = 1.0;
      --counts[largest];
      counts[j] = 1;
    }
    for (size_t j = 0; j < c; ++j) {
      auto s = sums.row(j);
      double norm = std::sqrt(Dot(s, s));
      if (norm == 0.0) continue;  // keep the previous centroid
      auto dst = centroids.row(j);
      for (size_t k = 0; k < d; ++k) dst[k] = s[k] / norm;
    }
  }

  index.centroid_pool_.dim = d;
  index.centroid_pool_.values.reserve(c * d);
  for (size_t j = 0; j < c; ++j) {
    std::vector<float> unit = ToUnitFloat(centroids.row(j));
    index.centroid_pool_.values.insert(index.centroid_pool_.values.end(), unit.begin(),
                                       unit.end());
  }
  Matrix stored(c, d);
  for (size_t i = 0; i < c * d; ++i) stored.values()[i] = index.centroid_pool_.values[i];
  assign_rows(stored);
  index.centroids_.assign(c, {});
  for (size_t i = 0; i < m; ++i) index.centroids_[assign[i]].push_back(i);
  index.probes_ = std::min(config.probes, c);
  return index;
}

std::vector<SearchHit> VectorIndex::RankRows(std::span<const float> query,
                                             const std::vector<size_t> &rows,
                                             size_t k) const {
  std::vector<SearchHit> hits;
  hits.reserve(rows.size());
  for (size_t r : rows) hits.push_back({pool_.ids[r], DotF(query, pool_.row(r)), r});
  const size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + keep, hits.end(), Ranks);
  hits.resize(keep);
  return hits;
}

std::vector<SearchHit> VectorIndex::ExactSearch(std::span<const float> query, size_t k) const {
  if (size() == 0) throw DataError("search on an empty index");
  if (k < 1) throw UsageError("k must be >= 1");
  if (query.size() != dim()) throw DataError("query width differs from index");
  std::vector<size_t> rows(size());
  std::iota(rows.begin(), rows.end(), 0);
  return RankRows(query, rows, k);
}

std::vector<SearchHit> VectorIndex::Search(std::span<const float> query, size_t k,
                                           SearchStats *stats) const {
  return Search(query, k, probes_, stats);
}

std::vector<SearchHit> VectorIndex::Search(std::span<const float> query, size_t k,
                                           size_t probes, SearchStats *stats) const {
  if (size() == 0) throw DataError("search on an empty index");
  if (k < 1) throw UsageError("k must be >= 1");
  if (query.size() != dim()) throw DataError("query width differs from index");
  if (mode_ == IndexMode::kExact) {
    if (stats != nullptr) stats->rows_scored = size();
    return ExactSearch(query, k);
  }
  const size_t c = centroids_.size();
  probes = std::clamp<size_t>(probes, 1, c);
  std::vector<std::pair<double, size_t>> order(c);
  for (size_t j = 0; j < c; ++j) order[j] = {DotF(query, centroid_pool_.row(j)), j};
  std::partial_sort(order.begin(), order.begin() + probes, order.end(),
                    [](const auto &a, const auto &b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<size_t> rows;
  for (size_t p = 0; p < probes; ++p) {
    const auto &members = centroids_[order[p].second];
    rows.insert(rows.end(), members.begin(), members.end());
  }
  if (stats != nullptr) stats->rows_scored = c + rows.size();
  return RankRows(query, rows, k);
}

void VectorIndex::Save(const std::string &dir) const {
  std::filesystem::create_directories(dir);
  SavePool(dir + "/pool", pool_);
  if (mode_ != IndexMode::kPartitioned) return;
  std::ofstream cents(dir + "/centroids.f32", std::ios::binary);
  std::ofstream assign(dir + "/assignments.txt");
  if (!cents || !assign) throw DataError("cannot write index files in " + dir);
  WritePoolVectors(cents, centroid_pool_);
  std::vector<size_t> cluster_of(size());
  for (size_t j = 0; j < centroids_.size(); ++j) {
    for (size_t r : centroids_[j]) cluster_of[r] = j;
  }
  for (size_t j : cluster_of) assign << j << '\n';
}

VectorIndex VectorIndex::Load(const std::string &dir, size_t probes) {
  EmbeddingPool pool = LoadPool(dir + "/pool");
  std::ifstream cents(dir + "/centroids.f32", std::ios::binary);
  if (!cents) return BuildExact(std::move(pool));

  VectorIndex index;
  index.mode_ = IndexMode::kPartitioned;
  index.pool_ = std::move(pool);
  index.Validate();
  index.centroid_pool_ = ReadPoolVectors(cents);
  if (index.centroid_pool_.dim != index.pool_.dim || index.centroid_pool_.size() == 0) {
    throw DataError(dir + ": centroid file does not match the pool");
  }
  std::ifstream assign(dir + "/assignments.txt");
  if (!assign) throw DataError("cannot open " + dir + "/assignments.txt");
  const size_t c = index.centroid_pool_.size();
  index.centroids_.assign(c, {});
  std::vector<std::string> lines = ReadIds(assign);
  if (lines.size() != index.size()) {
    throw DataError(dir + ": assignment count does not match the pool");
  }
  for (size_t r = 0; r < lines.size(); ++r) {
    size_t used = 0;
    unsigned long j = 0;
    try {
      j = std::stoul(lines[r], &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != lines[r].size() || j >= c) {
      throw DataError(dir + "/assignments.txt line " + std::to_string(r + 1) +
                      ": bad cluster '" + lines[r] + "'");
    }
    index.centroids_[j].push_back(r);
  }
  index.probes_ = std::clamp<size_t>(probes == 0 ? c : probes, 1, c);
  return index;
}

double RecallVsExact(const VectorIndex &index, const EmbeddingPool &queries,
                     size_t k, size_t probes) {
  if (queries.size() == 0) return 1.0;
  size_t found = 0;
  for (size_t q = 0; q < queries.size(); ++q) {
    const std::vector<SearchHit> truth = index.ExactSearch(queries.row(q), 1);
    const std::vector<SearchHit> hits = index.Search(queries.row(q), k, probes);
    for (const SearchHit &h : hits) {
      if (h.row == truth.front().row) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) / static_cast<double>(queries.size());
}

}  // namespace bitext
