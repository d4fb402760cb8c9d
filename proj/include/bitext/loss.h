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

#ifndef BITEXT_LOSS_H_
#define BITEXT_LOSS_H_

#include <span>
#include <vector>

#include "bitext/matrix.h"

namespace bitext {

inline constexpr double kDefaultMargin = 0.3;
inline constexpr double kDefaultScale = 10.0;

// Where the scaling factor s enters the logits.
enum class ScaleMode {
  kSimilarity,  // z = s * (cos - m [pos])
  kEmbedding,   // both embeddings scaled by s: z = s^2 * cos - m [pos]
};

struct LossConfig {
  double margin = kDefaultMargin;
  double scale = kDefaultScale;
  ScaleMode mode = ScaleMode::kSimilarity;

  void Validate() const;
  // Logits are similarity_weight() * sim - positive_offset() * [pos].
  double similarity_weight() const;
  double positive_offset() const;
};

enum class Direction { kSourceToTarget, kTargetToSource };

// Cosine scores between unit-norm rows: result(i, j) = x_i . y_j.
Matrix CosineScores(const Matrix &x, const Matrix &y);

// Square cosine matrix of an aligned batch.
Matrix SimilarityMatrix(const Matrix &x, const Matrix &y);

// -log softmax(z)[positive] for one ranking row of raw similarities.
double RankingTerm(std::span<const double> similarities, size_t positive,
                   const LossConfig &config);

// Per-item ranking terms, positive on the diagonal. For source_to_target
// item i ranks row i of `sim` (which may carry extra negative columns);
// target_to_source ranks column i of a square `sim`.
std::vector<double> RankingTerms(const Matrix &sim, const LossConfig &config,
                                 Direction direction);

// Additive-margin softmax loss averaged over the batch.
double AmsLoss(const Matrix &sim, const LossConfig &config, Direction direction);

// Sum of both directions.
double BidirectionalLoss(const Matrix &sim, const LossConfig &config);

struct EmbeddingGrads {
  double loss = 0.0;
  Matrix d_source;  // N x d
  Matrix d_target;  // N x d
  Matrix d_extra;   // rows of `extra_targets`, when given
};

// Bidirectional loss of raw (unnormalized) source and target vectors and its
// gradient with respect to those raw vectors; rows are L2-normalized inside.
// `extra_targets` adds negative columns to the source-to-target softmax of
// every row and leaves the other direction untouched.
EmbeddingGrads BidirectionalLossGrad(const Matrix &source, const Matrix &target,
                                     const LossConfig &config,
                                     const Matrix *extra_targets = nullptr);

// Row-normalized copy; fails on a zero or non-finite row.
Matrix NormalizeRows(const Matrix &m);

}  // namespace bitext

#endif  // BITEXT_LOSS_H_
