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

#include <gtest/gtest.h>

#include <cmath>

#include "bitext/error.h"
#include "oracles.h"

namespace bitext {
namespace {

std::vector<std::vector<double>> Nested(const Matrix &m) {
  std::vector<std::vector<double>> out(m.rows());
  for (size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

Matrix Identity(size_t n) {
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix FromValues(size_t rows, size_t cols, const std::vector<double> &v) {
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.values().begin());
  return m;
}

TEST(AmsLossTest, IdentityFixtures) {
  const double plain = std::log1p(std::exp(-1.0));
  const double margin = std::log1p(std::exp(-0.7));
  EXPECT_NEAR(AmsLoss(Identity(2), {0.0, 1.0}, Direction::kSourceToTarget), plain, 1e-12);
  EXPECT_NEAR(plain, 0.313262, 1e-6);
  EXPECT_NEAR(AmsLoss(Identity(2), {0.3, 1.0}, Direction::kSourceToTarget), margin, 1e-12);
  EXPECT_NEAR(margin, 0.4031860, 1e-6);
  EXPECT_NEAR(BidirectionalLoss(Identity(2), {0.3, 1.0}), 2 * margin, 1e-12);
}

TEST(AmsLossTest, SingletonBatchIsZero) {
  EXPECT_EQ(AmsLoss(Identity(1), {}, Direction::kSourceToTarget), 0.0);
  EXPECT_EQ(BidirectionalLoss(FromValues(1, 1, {0.25}), {}), 0.0);
}

TEST(AmsLossTest, MatchesNaiveOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng.Index(8);
    Matrix sim(n, n);
    for (double &v : sim.values()) v = rng.Uniform(-1, 1);
    const double m = rng.Uniform(0, 0.5);
    const double s = rng.Uniform(0.5, 20);
    LossConfig config{m, s};
    EXPECT_NEAR(AmsLoss(sim, config, Direction::kSourceToTarget),
                oracle::NaiveAmsLoss(Nested(sim), m, s, false), 1e-10);
    EXPECT_NEAR(AmsLoss(sim, config, Direction::kTargetToSource),
                oracle::NaiveAmsLoss(Nested(sim), m, s, true), 1e-10);
  }
}

TEST(AmsLossTest, TransposeSwapsDirections) {
  Rng rng(4);
  Matrix sim(6, 6);
  for (double &v : sim.values()) v = rng.Uniform(-1, 1);
  LossConfig config;
  EXPECT_DOUBLE_EQ(AmsLoss(sim, config, Direction::kSourceToTarget),
                   AmsLoss(sim.Transposed(), config, Direction::kTargetToSource));
  EXPECT_DOUBLE_EQ(BidirectionalLoss(sim, config), BidirectionalLoss(sim.Transposed(), config));
}

TEST(AmsLossTest, MarginIsStrictlyMonotone) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 2 + rng.Index(7);
    Matrix sim(n, n);
    for (double &v : sim.values()) v = rng.Uniform(-1, 1);
    double previous = -INFINITY;
    for (double m : {0.0, 0.1, 0.2, 0.3}) {
      const double loss = BidirectionalLoss(sim, {m, kDefaultScale});
      EXPECT_GT(loss, previous);
      previous = loss;
    }
  }
}

TEST(AmsLossTest, ScaleKeepsRowArgmax) {
  Rng rng(6);
  Matrix x = oracle::RandomUnitRows(8, 5, rng);
  Matrix y = oracle::RandomUnitRows(8, 5, rng);
  Matrix sim = SimilarityMatrix(x, y);
  for (double s : {1.0, 10.0, 100.0}) {
    for (size_t i = 0; i < 8; ++i) {
      size_t best = 0;
      for (size_t j = 1; j < 8; ++j) {
        if (s * sim(i, j) > s * sim(i, best)) best = j;
      }
      size_t reference = std::max_element(sim.row(i).begin(), sim.row(i).end()) - sim.row(i).begin();
      EXPECT_EQ(best, reference);
    }
  }
}

TEST(AmsLossTest, StableAtExtremeScale) {
  Matrix sim = FromValues(2, 2, {1.0, -1.0, -1.0, 1.0});
  const double loss = BidirectionalLoss(sim, {0.3, 1e4});
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, 0.0, 1e-12);
  Matrix wrong = FromValues(2, 2, {-1.0, 1.0, 1.0, -1.0});
  EXPECT_NEAR(BidirectionalLoss(wrong, {0.0, 1e4}), 2 * 2e4, 1e-6);
}

TEST(AmsLossTest, RejectsBadInput) {
  EXPECT_THROW(AmsLoss(Identity(2), {1.0, 1.0}, Direction::kSourceToTarget), Error);
  EXPECT_THROW(AmsLoss(Identity(2), {0.3, 0.0}, Direction::kSourceToTarget), Error);
  EXPECT_THROW(AmsLoss(Matrix(2, 3), {}, Direction::kSourceToTarget), Error);
  Matrix nan = Identity(2);
  nan(0, 1) = NAN;
  EXPECT_THROW(BidirectionalLoss(nan, {}), Error);
}

TEST(AmsLossTest, EmbeddingScaleMode) {
  Matrix sim = FromValues(2, 2, {0.5, 0.1, 0.2, 0.4});
  LossConfig config{0.3, 2.0, ScaleMode::kEmbedding};
  // z = s^2 cos - m on the positive.
  const double row0 = -std::log(std::exp(4 * 0.5 - 0.3) / (std::exp(4 * 0.5 - 0.3) + std::exp(4 * 0.1)));
  const double row1 = -std::log(std::exp(4 * 0.4 - 0.3) / (std::exp(4 * 0.4 - 0.3) + std::exp(4 * 0.2)));
  EXPECT_NEAR(AmsLoss(sim, config, Direction::kSourceToTarget), (row0 + row1) / 2, 1e-12);
}

TEST(CosineScoresTest, UnitRowsGiveCosines) {
  Matrix x = NormalizeRows(FromValues(1, 2, {3.0, 4.0}));
  Matrix y = NormalizeRows(FromValues(2, 2, {0.0, 2.0, -1.0, 0.0}));
  Matrix c = CosineScores(x, y);
  EXPECT_NEAR(c(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(c(0, 1), -0.6, 1e-15);
  EXPECT_THROW(NormalizeRows(Matrix(1, 3)), Error);
}

double LossOfRaw(const std::vector<double> &flat, size_t n, size_t d, size_t extra,
                 const LossConfig &config) {
  Matrix x(n, d), y(n, d), e(extra, d);
  std::copy(flat.begin(), flat.begin() + n * d, x.values().begin());
  std::copy(flat.begin() + n * d, flat.begin() + 2 * n * d, y.values().begin());
  std::copy(flat.begin() + 2 * n * d, flat.end(), e.values().begin());
  Matrix columns = NormalizeRows(y);
  if (extra > 0) {
    Matrix unit_extra = NormalizeRows(e);
    for (size_t r = 0; r < extra; ++r) columns.AppendRow(unit_extra.row(r));
  }
  Matrix sim = CosineScores(NormalizeRows(x), columns);
  double total = 0.0;
  for (double t : RankingTerms(sim, config, Direction::kSourceToTarget)) total += t;
  Matrix square(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) square(i, j) = sim(i, j);
  }
  for (double t : RankingTerms(square, config, Direction::kTargetToSource)) total += t;
  return total / static_cast<double>(n);
}

TEST(LossGradTest, MatchesCentralDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 120; ++trial) {
    const size_t n = 1 + rng.Index(8);
    const size_t d = 2 + rng.Index(15);
    const size_t extra = trial % 3 == 0 ? rng.Index(4) : 0;
    LossConfig config{rng.Uniform(0, 0.5), rng.Uniform(1, 10),
                      trial % 2 ? ScaleMode::kSimilarity : ScaleMode::kEmbedding};
    if (config.mode == ScaleMode::kEmbedding) config.scale = std::sqrt(config.scale);
    Matrix x = oracle::RandomMatrix(n, d, rng);
    Matrix y = oracle::RandomMatrix(n, d, rng);
    Matrix e = oracle::RandomMatrix(extra, d, rng);
    EmbeddingGrads g = BidirectionalLossGrad(x, y, config, extra > 0 ? &e : nullptr);

    std::vector<double> flat(x.values().begin(), x.values().end());
    flat.insert(flat.end(), y.values().begin(), y.values().end());
    flat.insert(flat.end(), e.values().begin(), e.values().end());
    EXPECT_NEAR(g.loss, LossOfRaw(flat, n, d, extra, config), 1e-12);
    std::vector<double> analytic(g.d_source.values().begin(), g.d_source.values().end());
    analytic.insert(analytic.end(), g.d_target.values().begin(), g.d_target.values().end());
    analytic.insert(analytic.end(), g.d_extra.values().begin(), g.d_extra.values().end());
    std::vector<double> numeric = oracle::CentralDifference(
        flat, [&](const std::vector<double> &v) { return LossOfRaw(v, n, d, extra, config); },
        1e-6);
    EXPECT_LE(oracle::MaxRelativeError(analytic, numeric, 1e-4), 1e-4) << "trial " << trial;
  }
}

}  // namespace
}  // namespace bitext
