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

#ifndef BITEXT_INDEX_H_
#define BITEXT_INDEX_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bitext/matrix.h"

namespace bitext {

// Row-major float32 embeddings with one id per row.
struct EmbeddingPool {
  size_t dim = 0;
  std::vector<float> values;
  std::vector<std::string> ids;

  size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> row(size_t i) const { return {values.data() + i * dim, dim}; }

  static EmbeddingPool FromMatrix(const Matrix &m, std::vector<std::string> ids);
  bool operator==(const EmbeddingPool &) const = default;
};

// Pool file: "M d\n" then M*d little-endian float32 values.
void WritePoolVectors(std::ostream &out, const EmbeddingPool &pool);
// Reads vectors only; ids are left empty.
EmbeddingPool ReadPoolVectors(std::istream &in);
void WriteIds(std::ostream &out, const std::vector<std::string> &ids);
std::vector<std::string> ReadIds(std::istream &in);

// Writes <stem>.f32 and <stem>.ids.
void SavePool(const std::string &stem, const EmbeddingPool &pool);
EmbeddingPool LoadPool(const std::string &stem);

double DotF(std::span<const float> a, std::span<const float> b);

struct IndexConfig {
  size_t clusters = 64;
  size_t probes = 16;
  int kmeans_iters = 20;
  uint64_t seed = 1;
};

enum class IndexMode { kExact, kPartitioned };

struct SearchHit {
  std::string id;
  double score = 0.0;
  size_t row = 0;

  bool operator==(const SearchHit &) const = default;
};

struct SearchStats {
  size_t rows_scored = 0;  // centroids plus pool rows
};

// Cosine search over unit-norm vectors. Partitioned mode clusters the pool
// with spherical k-means and scans only the best-matching clusters. Ranking
// ties break by ascending id.
class VectorIndex {
 public:
  static VectorIndex BuildExact(EmbeddingPool pool);
  static VectorIndex BuildPartitioned(EmbeddingPool pool, const IndexConfig &config);

  IndexMode mode() const { return mode_; }
  size_t size() const { return pool_.size(); }
  size_t dim() const { return pool_.dim; }
  size_t num_clusters() const { return centroids_.size(); }
  size_t default_probes() const { return probes_; }
  const EmbeddingPool &pool() const { return pool_; }
  const EmbeddingPool &centroids() const { return centroid_pool_; }
  const std::vector<std::vector<size_t>> &members() const { return centroids_; }

  // Uses the build-time probe count in partitioned mode.
  std::vector<SearchHit> Search(std::span<const float> query, size_t k,
                                SearchStats *stats = nullptr) const;
  std::vector<SearchHit> Search(std::span<const float> query, size_t k,
                                size_t probes, SearchStats *stats = nullptr) const;
  // Brute-force scan regardless of mode.
  std::vector<SearchHit> ExactSearch(std::span<const float> query, size_t k) const;

  // Directory layout: pool.f32 + pool.ids, and for partitioned indexes
  // centroids.f32 + assignments.txt (cluster of each pool row).
  void Save(const std::string &dir) const;
  static VectorIndex Load(const std::string &dir, size_t probes = 0);

 private:
  VectorIndex() = default;
  void Validate() const;
  std::vector<SearchHit> RankRows(std::span<const float> query,
                                  const std::vector<size_t> &rows, size_t k) const;

  IndexMode mode_ = IndexMode::kExact;
  EmbeddingPool pool_;
  EmbeddingPool centroid_pool_;
  std::vector<std::vector<size_t>> centroids_;  // member rows per cluster
  size_t probes_ = 0;
};

// Fraction of queries whose exact top-1 appears in the index's top-k
// (partitioned search at `probes`; exact indexes score 1).
double RecallVsExact(const VectorIndex &index, const EmbeddingPool &queries,
                     size_t k, size_t probes);

}  // namespace bitext

#endif  // BITEXT_INDEX_H_
