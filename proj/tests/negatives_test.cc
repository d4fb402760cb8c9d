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

#include "bitext/negatives.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bitext/synthetic.h"
#include "oracles.h"

namespace bitext {
namespace {

TEST(ShardTest, ShardedLossEqualsUnsharded) {
  Rng rng(31);
  for (size_t n : {4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x = oracle::RandomUnitRows(n, 8, rng);
      Matrix y = oracle::RandomUnitRows(n, 8, rng);
      LossConfig config{rng.Uniform(0, 0.5), rng.Uniform(1, 20)};
      const double full = BidirectionalLoss(SimilarityMatrix(x, y), config);
      for (size_t k = 1; k <= n; ++k) {
        if (n % k != 0) continue;
        ShardedBatch batch = ShardBatch(x, y, k);
        EXPECT_EQ(batch.num_shards(), k);
        EXPECT_EQ(batch.GatherSources(), x);
        EXPECT_EQ(batch.GatherTargets(), y);
        EXPECT_LE(std::abs(ShardedBidirectionalLoss(batch, config) - full), 1e-9);
      }
    }
  }
}

TEST(ShardTest, LocalScopeNeverExceedsBroadcast) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix x = oracle::RandomUnitRows(8, 4, rng);
    Matrix y = oracle::RandomUnitRows(8, 4, rng);
    ShardedBatch batch = ShardBatch(x, y, 4);
    EXPECT_GE(ShardedBidirectionalLoss(batch, {}, NegativeScope::kBroadcast),
              ShardedBidirectionalLoss(batch, {}, NegativeScope::kLocal));
  }
  Matrix x = oracle::RandomUnitRows(8, 4, rng);
  ShardedBatch single = ShardBatch(x, x, 1);
  EXPECT_DOUBLE_EQ(ShardedBidirectionalLoss(single, {}, NegativeScope::kLocal),
                   ShardedBidirectionalLoss(single, {}, NegativeScope::kBroadcast));
}

TEST(ShardTest, RejectsUnevenShards) {
  Matrix x(6, 2, 0.5);
  EXPECT_THROW(ShardBatch(x, x, 4), Error);
  EXPECT_THROW(ShardBatch(x, x, 0), Error);
  EXPECT_THROW(ShardBatch(x, Matrix(5, 2), 1), Error);
}

class HardNegativeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    CipherCorpusConfig cc;
    cc.lexicon_size = 60;
    cc.train_pairs = 40;
    cc.test_pairs = 5;
    cc.mono_sentences = 10;
    corpus_ = MakeCipherCorpus(cc);
    std::map<std::string, std::vector<Sentence>> by_lang;
    for (const SentencePair &p : corpus_.train) {
      by_lang["xa"].push_back(p.src);
      by_lang["xb"].push_back(p.tgt);
      pool_.push_back(p.tgt);
    }
    vocab_ = BuildVocab(by_lang, {200, 0.3, 1.0});
    EncoderConfig ec;
    ec.vocab_size = static_cast<int64_t>(vocab_.size());
    ec.hidden_dim = 8;
    ec.embed_dim = 8;
    weak_ = EncoderParams::Random(ec, 3);
  }

  CipherCorpus corpus_;
  std::vector<Sentence> pool_;
  Vocab vocab_;
  EncoderParams weak_;
};

TEST_F(HardNegativeTest, MatchesBruteForceRanking) {
  HardNegativeSet set = MineHardNegatives(weak_, vocab_, corpus_.train, pool_, 3, 64);
  EXPECT_EQ(set.per_source, 3u);
  EXPECT_EQ(set.by_source.size(), corpus_.train.size());
  for (const SentencePair &pair : corpus_.train) {
    std::vector<double> q = Encode(weak_, Tokenize(pair.src.text, vocab_, 64));
    std::vector<std::pair<double, size_t>> ranked;
    for (size_t j = 0; j < pool_.size(); ++j) {
      if (pool_[j].text == pair.tgt.text) continue;
      ranked.emplace_back(-Dot(q, Encode(weak_, Tokenize(pool_[j].text, vocab_, 64))), j);
    }
    std::sort(ranked.begin(), ranked.end());
    const auto &mined = set.by_source.at(pair.src.id);
    ASSERT_EQ(mined.size(), 3u);
    for (size_t r = 0; r < 3; ++r) {
      EXPECT_NE(mined[r].sentence.text, pair.tgt.text);
      EXPECT_NEAR(mined[r].score, -ranked[r].first, 1e-12);
      EXPECT_EQ(mined[r].sentence.id, pool_[ranked[r].second].id);
    }
  }
}

TEST_F(HardNegativeTest, RejectsShortOrIncompletePools) {
  std::vector<Sentence> tiny(pool_.begin(), pool_.begin() + 3);
  EXPECT_THROW(MineHardNegatives(weak_, vocab_, corpus_.train, tiny, 3, 64), Error);
  std::vector<Sentence> missing(pool_.begin() + 1, pool_.end());
  EXPECT_THROW(MineHardNegatives(weak_, vocab_, corpus_.train, missing, 3, 64), Error);
}

TEST_F(HardNegativeTest, AugmentationAddsColumnsPerSource) {
  HardNegativeSet set = MineHardNegatives(weak_, vocab_, corpus_.train, pool_, 2, 64);
  std::vector<SentencePair> batch(corpus_.train.begin(), corpus_.train.begin() + 5);
  AugmentedBatch aug = AugmentWithHardNegatives(batch, set);
  EXPECT_EQ(aug.pairs.size(), 5u);
  EXPECT_EQ(aug.extra_targets.size(), 10u);
  EXPECT_EQ(aug.extra_targets[2].id, set.by_source.at(batch[1].src.id)[0].sentence.id);

  HardNegativeSet none;
  AugmentedBatch plain = AugmentWithHardNegatives(batch, none);
  EXPECT_TRUE(plain.extra_targets.empty());
}

TEST(AugmentedLossTest, ZeroExtraEqualsBidirectional) {
  Rng rng(33);
  Matrix x = oracle::RandomUnitRows(6, 5, rng);
  Matrix y = oracle::RandomUnitRows(6, 5, rng);
  EXPECT_NEAR(AugmentedBidirectionalLoss(x, y, Matrix(), {}),
              BidirectionalLoss(SimilarityMatrix(x, y), {}), 1e-12);
}

TEST(AugmentedLossTest, ExtraColumnsOnlyAffectSourceDirection) {
  Rng rng(34);
  Matrix x = oracle::RandomUnitRows(4, 5, rng);
  Matrix y = oracle::RandomUnitRows(4, 5, rng);
  Matrix e = oracle::RandomUnitRows(8, 5, rng);
  LossConfig config;
  Matrix sim = SimilarityMatrix(x, y);
  // Source direction by hand over N + extra columns.
  double forward = 0.0;
  for (size_t i = 0; i < 4; ++i) {
    double denom = 0.0, positive = 0.0;
    for (size_t j = 0; j < 12; ++j) {
      const double c = j < 4 ? sim(i, j) : Dot(x.row(i), e.row(j - 4));
      const double z = config.scale * (c - (j == i ? config.margin : 0.0));
      denom += std::exp(z);
      if (j == i) positive = z;
    }
    forward += std::log(denom) - positive;
  }
  const double backward = AmsLoss(sim, config, Direction::kTargetToSource);
  EXPECT_NEAR(AugmentedBidirectionalLoss(x, y, e, config), forward / 4 + backward, 1e-10);

  // A duplicated hard negative is just one more column.
  Matrix dup = e;
  dup.AppendRow(e.row(0));
  EXPECT_GT(AugmentedBidirectionalLoss(x, y, dup, config),
            AugmentedBidirectionalLoss(x, y, e, config));
  EmbeddingGrads g = BidirectionalLossGrad(x, y, config, &e);
  EXPECT_NEAR(g.loss, AugmentedBidirectionalLoss(x, y, e, config), 1e-10);
  EXPECT_EQ(g.d_extra.rows(), 8u);
}

}  // namespace
}  // namespace bitext
