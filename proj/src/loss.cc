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

#include "bitext/loss.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "bitext/error.h"

namespace bitext {
namespace {

void CheckFinite(const Matrix &m, const char *what) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + " has a non-finite entry");
  }
}

// Softmax of the ranking logits for one row, written into `probs`; returns
// -log probs[positive].
double RankingSoftmax(std::span<const double> sims, size_t positive,
                      const LossConfig &config, std::vector<double> &probs) {
  const double a = config.similarity_weight();
  const double b = config.positive_offset();
  probs.resize(sims.size());
  double peak = -INFINITY;
  for (size_t j = 0; j < sims.size(); ++j) {
    probs[j] = a * sims[j] - (j == positive ? b : 0.0);
    peak = std::max(peak, probs[j]);
  }
  const double z_pos = probs[positive];
  double denom = 0.0;
  for (double &p : probs) {
    p = std::exp(p - peak);
    denom += p;
  }
  for (double &p : probs) p /= denom;
  return std::log(denom) + peak - z_pos;
}

}  // namespace

void LossConfig::Validate() const {
  if (!(margin >= 0.0 && margin < 1.0)) {
    throw UsageError("margin must lie in [0, 1), got " + std::to_string(margin));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw UsageError("scale must be positive and finite");
  }
}

double LossConfig::similarity_weight() const {
  return mode == ScaleMode::kSimilarity ? scale : scale * scale;
}

double LossConfig::positive_offset() const {
  return mode == ScaleMode::kSimilarity ? scale * margin : margin;
}

Matrix CosineScores(const Matrix &x, const Matrix &y) {
  if (x.cols() != y.cols()) {
    throw DataError("embedding widths differ: " + std::to_string(x.cols()) +
                    " vs " + std::to_string(y.cols()));
  }
  Matrix out(x.rows(), y.rows());
  for (size_t i = 0; i < x.rows(); ++i) {
    for (size_t j = 0; j < y.rows(); ++j) out(i, j) = Dot(x.row(i), y.row(j));
  }
  return out;
}

Matrix SimilarityMatrix(const Matrix &x, const Matrix &y) {
  if (x.rows() != y.rows()) {
    throw DataError("batch sides differ: " + std::to_string(x.rows()) +
                    " sources vs " + std::to_string(y.rows()) + " targets");
  }
  return CosineScores(x, y);
}

double RankingTerm(std::span<const double> similarities, size_t positive,
                   const LossConfig &config) {
  config.Validate();
  std::vector<double> probs;
  return RankingSoftmax(similarities, positive, config, probs);
}

std::vector<double> RankingTerms(const Matrix &sim, const LossConfig &config,
                                 Direction direction) {
  config.Validate();
  CheckFinite(sim, "similarity matrix");
  const size_t n = sim.rows();
  if (n == 0) throw DataError("empty batch");
  std::vector<double> terms(n);
  std::vector<double> probs;
  if (direction == Direction::kSourceToTarget) {
    if (sim.cols() < n) throw DataError("fewer target columns than sources");
    for (size_t i = 0; i < n; ++i) {
      terms[i] = RankingSoftmax(sim.row(i), i, config, probs);
    }
  } else {
    if (sim.cols() != n) throw DataError("target_to_source needs a square matrix");
    std::vector<double> column(n);
    for (size_t j = 0; j < n; ++j) {
      for (size_t i = 0; i < n; ++i) column[i] = sim(i, j);
      terms[j] = RankingSoftmax(column, j, config, probs);
    }
  }
  return terms;
}

double AmsLoss(const Matrix &sim, const LossConfig &config, Direction direction) {
  if (sim.rows() != sim.cols()) throw DataError("similarity matrix must be square");
  std::vector<double> terms = RankingTerms(sim, config, direction);
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

double BidirectionalLoss(const Matrix &sim, const LossConfig &config) {
  return AmsLoss(sim, config, Direction::kSourceToTarget) +
         AmsLoss(sim, config, Direction::kTargetToSource);
}

Matrix NormalizeRows(const Matrix &m) {
  Matrix out = m;
  for (size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double norm = std::sqrt(Dot(row, row));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("cannot normalize row " + std::to_string(i) +
                           " (norm " + std::to_string(norm) + ")");
    }
    for (double &v : row) v /= norm;
  }
  return out;
}

namespace {

// Maps a gradient with respect to normalized rows back to the raw rows:
// d raw = (d hat - hat (hat . d hat)) / |raw|.
Matrix ThroughNormalization(const Matrix &raw, const Matrix &hat,
                            const Matrix &d_hat) {
  Matrix out(raw.rows(), raw.cols());
  for (size_t i = 0; i < raw.rows(); ++i) {
    const double norm = std::sqrt(Dot(raw.row(i), raw.row(i)));
    const double along = Dot(hat.row(i), d_hat.row(i));
    for (size_t k = 0; k < raw.cols(); ++k) {
      out(i, k) = (d_hat(i, k) - hat(i, k) * along) / norm;
    }
  }
  return out;
}

}  // namespace

EmbeddingGrads BidirectionalLossGrad(const Matrix &source, const Matrix &target,
                                     const LossConfig &config,
                                     const Matrix *extra_targets) {
  config.Validate();
  CheckFinite(source, "source embeddings");
  CheckFinite(target, "target embeddings");
  const size_t n = source.rows();
  if (n == 0) throw DataError("empty batch");
  if (target.rows() != n) throw DataError("batch sides differ in size");
  const size_t d = source.cols();
  if (target.cols() != d) throw DataError("embedding widths differ");
  const size_t extra = extra_targets != nullptr ? extra_targets->rows() : 0;
  if (extra > 0) {
    CheckFinite(*extra_targets, "extra targets");
    if (extra_targets->cols() != d) throw DataError("extra target width differs");
  }

  const Matrix x = NormalizeRows(source);
  const Matrix y = NormalizeRows(target);
  Matrix e;
  if (extra > 0) e = NormalizeRows(*extra_targets);

  // Source-to-target logits span [targets | extra targets].
  Matrix sim(n, n + extra);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) sim(i, j) = Dot(x.row(i), y.row(j));
    for (size_t j = 0; j < extra; ++j) sim(i, n + j) = Dot(x.row(i), e.row(j));
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double a = config.similarity_weight();
  Matrix d_sim(n, n + extra);
  std::vector<double> probs;
  double forward = 0.0;
  for (size_t i = 0; i < n; ++i) {
    forward += RankingSoftmax(sim.row(i), i, config, probs);
    for (size_t j = 0; j < n + extra; ++j) {
      d_sim(i, j) = a * inv_n * (probs[j] - (i == j ? 1.0 : 0.0));
    }
  }
  double backward = 0.0;
  std::vector<double> column(n);
  for (size_t j = 0; j < n; ++j) {
    for (size_t i = 0; i < n; ++i) column[i] = sim(i, j);
    backward += RankingSoftmax(column, j, config, probs);
    for (size_t i = 0; i < n; ++i) {
      d_sim(i, j) += a * inv_n * (probs[i] - (i == j ? 1.0 : 0.0));
    }
  }

  EmbeddingGrads out;
  out.loss = forward * inv_n + backward * inv_n;
  if (!std::isfinite(out.loss)) throw NumericalError("ranking loss is not finite");

  Matrix dx(n, d), dy(n, d), de(extra, d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n + extra; ++j) {
      const double g = d_sim(i, j);
      if (g == 0.0) continue;
      auto other = j < n ? y.row(j) : e.row(j - n);
      auto dst = j < n ? dy.row(j) : de.row(j - n);
      for (size_t k = 0; k < d; ++k) {
        dx(i, k) += g * other[k];
        dst[k] += g * x(i, k);
      }
    }
  }
  out.d_source = ThroughNormalization(source, x, dx);
  out.d_target = ThroughNormalization(target, y, dy);
  if (extra > 0) out.d_extra = ThroughNormalization(*extra_targets, e, de);

  for (const Matrix *m : {&out.d_source, &out.d_target, &out.d_extra}) {
    for (double v : m->values()) {
      if (!std::isfinite(v)) throw NumericalError("non-finite ranking gradient");
    }
  }
  return out;
}

}  // namespace bitext
