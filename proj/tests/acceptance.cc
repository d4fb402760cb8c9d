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


// Runs every acceptance criterion and prints one PASS/FAIL line for each.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bitext/corpus.h"
#include "bitext/encoder.h"
#include "bitext/error.h"
#include "bitext/evaluation.h"
#include "bitext/index.h"
#include "bitext/loss.h"
#include "bitext/mining.h"
#include "bitext/negatives.h"
#include "bitext/random.h"
#include "bitext/synthetic.h"
#include "bitext/trainer.h"
#include "bitext/vocab.h"
#include "oracles.h"

namespace bitext {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Format(const char *fmt, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a);
  return buf;
}

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int RunCli(const fs::path &dir, const std::string &args) {
  const std::string command = "cd '" + dir.string() + "' && '" + BITEXT_CLI_PATH + "' " +
                              args + " >> cli.log 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path ScratchDir(const std::string &name) {
  fs::path dir = fs::temp_directory_path() /
                 ("bitext_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> Flatten(const EncoderParams &p) {
  std::vector<double> out;
  for (auto t : p.Tensors()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

EncoderParams Unflatten(const EncoderConfig &config, const std::vector<double> &flat) {
  EncoderParams p = EncoderParams::Zeros(config);
  size_t at = 0;
  for (auto t : p.Tensors()) {
    std::copy(flat.begin() + at, flat.begin() + at + t.size(), t.begin());
    at += t.size();
  }
  return p;
}

// Loss of raw vectors computed from normalized rows and per-row ranking terms.
double RawLoss(const std::vector<double> &flat, size_t n, size_t d, const LossConfig &config) {
  Matrix x(n, d), y(n, d);
  std::copy(flat.begin(), flat.begin() + n * d, x.values().begin());
  std::copy(flat.begin() + n * d, flat.end(), y.values().begin());
  return BidirectionalLoss(CosineScores(NormalizeRows(x), NormalizeRows(y)), config);
}

Outcome GradientCorrectness() {
  const Clock::time_point start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 100; ++trial, ++instances) {
    const size_t n = 1 + rng.Index(8);
    const size_t d = 2 + rng.Index(15);
    LossConfig config{rng.Uniform(0, 0.5), rng.Uniform(1, 10)};
    Matrix x = oracle::RandomMatrix(n, d, rng), y = oracle::RandomMatrix(n, d, rng);
    EmbeddingGrads g = BidirectionalLossGrad(x, y, config);
    std::vector<double> flat(x.values().begin(), x.values().end());
    flat.insert(flat.end(), y.values().begin(), y.values().end());
    std::vector<double> analytic(g.d_source.values().begin(), g.d_source.values().end());
    analytic.insert(analytic.end(), g.d_target.values().begin(), g.d_target.values().end());
    std::vector<double> numeric = oracle::CentralDifference(
        flat, [&](const std::vector<double> &v) { return RawLoss(v, n, d, config); }, 1e-6);
    worst = std::max(worst, oracle::MaxRelativeError(analytic, numeric, 1e-4));
  }
  for (int trial = 0; trial < 60; ++trial, ++instances) {
    EncoderConfig c;
    c.vocab_size = 8 + static_cast<int64_t>(rng.Index(57));
    c.hidden_dim = 2 + static_cast<int64_t>(rng.Index(15));
    c.num_layers = 1 + static_cast<int64_t>(rng.Index(2));
    c.max_seq_len = 16;
    c.tie_mlm_head = trial % 3 == 0;
    c.embed_dim = c.tie_mlm_head ? c.hidden_dim : 2 + static_cast<int64_t>(rng.Index(15));
    EncoderParams p = EncoderParams::Random(c, 500 + trial);
    for (double &w : p.mlm_weights.values()) w = rng.Normal() * 0.5;
    std::vector<MaskedSequence> batch;
    for (int s = 0; s < 2; ++s) {
      std::vector<int> ids = {Vocab::kCls};
      const size_t len = 1 + rng.Index(8);
      for (size_t t = 0; t < len; ++t) {
        ids.push_back(Vocab::kNumSpecial + static_cast<int>(rng.Index(c.vocab_size - Vocab::kNumSpecial)));
      }
      ids.push_back(Vocab::kSep);
      batch.push_back(MaskTokens({ids, "", 0}, {}, rng));
    }
    LossAndGrad analytic = MlmLossAndGrad(p, batch);
    std::vector<double> numeric = oracle::CentralDifference(
        Flatten(p),
        [&](const std::vector<double> &v) { return MlmLossAndGrad(Unflatten(c, v), batch).loss; },
        1e-6);
    worst = std::max(worst, oracle::MaxRelativeError(Flatten(analytic.grads), numeric, 1e-4));
  }
  const double seconds = Seconds(start);
  return {worst <= 1e-4 && seconds < 30.0,
          std::to_string(instances) + " instances, max relative error " +
              Format("%.3g", worst) + ", " + Format("%.1f s", seconds)};
}

Outcome ShardEquivalence() {
  const Clock::time_point start = Clock::now();
  Rng rng(102);
  double worst = 0.0;
  int checks = 0;
  for (size_t n : {4, 8, 16}) {
    for (int trial = 0; trial < 50; ++trial) {
      Matrix x = oracle::RandomUnitRows(n, 8, rng), y = oracle::RandomUnitRows(n, 8, rng);
      LossConfig config{rng.Uniform(0, 0.5), rng.Uniform(1, 20)};
      const double full = BidirectionalLoss(SimilarityMatrix(x, y), config);
      for (size_t k = 1; k <= n; ++k) {
        if (n % k != 0) continue;
        worst = std::max(worst, std::abs(ShardedBidirectionalLoss(ShardBatch(x, y, k), config) - full));
        ++checks;
      }
    }
  }
  const double seconds = Seconds(start);
  return {worst <= 1e-9 && seconds < 5.0,
          std::to_string(checks) + " (N, K) checks, max deviation " + Format("%.3g", worst) +
              ", " + Format("%.2f s", seconds)};
}

Outcome ClosedFormValues() {
  Matrix identity(2, 2);
  identity(0, 0) = identity(1, 1) = 1.0;
  const double plain = AmsLoss(identity, {0.0, 1.0}, Direction::kSourceToTarget);
  const double margin = AmsLoss(identity, {0.3, 1.0}, Direction::kSourceToTarget);
  const double plain_oracle = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  const double margin_oracle = -std::log(std::exp(0.7) / (std::exp(0.7) + 1.0));
  const bool pass = std::abs(plain - 0.313262) <= 1e-6 && std::abs(plain - plain_oracle) <= 1e-12 &&
                    std::abs(margin - margin_oracle) <= 1e-12;
  return {pass, Format("m=0: %.7f (stated 0.313262)", plain) +
                    Format(", m=0.3: %.7f", margin) +
                    Format(" (closed form %.7f; stated digits 0.403098)", margin_oracle)};
}

Outcome MarginAndArgmax() {
  Rng rng(104);
  int monotone = 0, invariant = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.Index(15);
    Matrix sim(n, n);
    for (double &v : sim.values()) v = rng.Uniform(-1, 1);
    bool increasing = true;
    double previous = -1.0;
    for (double m : {0.0, 0.1, 0.2, 0.3}) {
      const double loss = BidirectionalLoss(sim, {m, 10.0});
      if (!(loss > previous)) increasing = false;
      previous = loss;
    }
    monotone += increasing;
    bool same = true;
    for (size_t i = 0; i < n; ++i) {
      size_t reference = n;
      for (double s : {1.0, 10.0, 100.0}) {
        std::vector<double> z(n);
        LossConfig config{0.0, s};
        for (size_t j = 0; j < n; ++j) z[j] = config.similarity_weight() * sim(i, j);
        const size_t best = std::max_element(z.begin(), z.end()) - z.begin();
        if (reference == n) reference = best;
        if (best != reference) same = false;
      }
    }
    invariant += same;
  }
  return {monotone == 1000 && invariant == 1000,
          std::to_string(monotone) + "/1000 strictly increasing in m, " +
              std::to_string(invariant) + "/1000 argmax-invariant in s"};
}

// Shared toy setup for the retrieval criteria.
struct Toy {
  CipherCorpus corpus;
  Vocab vocab;
  EncoderConfig config;
};

const Toy &ToyTask() {
  static const Toy toy = [] {
    Toy t;
    t.corpus = MakeCipherCorpus({});
    std::map<std::string, std::vector<Sentence>> by_lang;
    for (const SentencePair &p : t.corpus.train) {
      by_lang["xa"].push_back(p.src);
      by_lang["xb"].push_back(p.tgt);
    }
    for (const Sentence &s : t.corpus.mono_src) by_lang["xa"].push_back(s);
    for (const Sentence &s : t.corpus.mono_tgt) by_lang["xb"].push_back(s);
    t.vocab = BuildVocab(by_lang, {1000, 0.3, 1.0});
    t.config.vocab_size = static_cast<int64_t>(t.vocab.size());
    t.config.tie_mlm_head = true;
    return t;
  }();
  return toy;
}

constexpr uint64_t kInitSeed = 3;
constexpr int64_t kRetrievalSteps = 3000;

double FinetuneP1(const std::vector<SentencePair> &train, double *seconds) {
  const Toy &toy = ToyTask();
  const Clock::time_point start = Clock::now();
  EncoderParams params = EncoderParams::Random(toy.config, kInitSeed);
  OptimizerState state = OptimizerState::Zeros(toy.config);
  TrainConfig config;
  config.steps = kRetrievalSteps;
  FinetuneDualEncoder(params, state, train, toy.vocab, config);
  const double p1 = RetrievalP1(params, toy.vocab, toy.corpus.test, 64);
  *seconds = Seconds(start);
  return p1;
}

double clean_p1 = -1.0;

Outcome ToyRetrieval() {
  double seconds = 0.0;
  clean_p1 = FinetuneP1(ToyTask().corpus.train, &seconds);
  return {clean_p1 >= 0.95 && seconds <= 300.0,
          Format("P@1 %.4f on 1000 test pairs", clean_p1) +
              Format(" after %.0f steps", kRetrievalSteps) + Format(" in %.1f s", seconds)};
}

Outcome NoisyDegradation() {
  double seconds = 0.0;
  const std::vector<SentencePair> noisy = Mispair(ToyTask().corpus.train, 0.5, 11);
  const double noisy_p1 = FinetuneP1(noisy, &seconds);
  const double drop = clean_p1 - noisy_p1;
  return {clean_p1 >= 0.0 && drop >= 0.20,
          Format("clean %.4f", clean_p1) + Format(", 50%% mispaired %.4f", noisy_p1) +
              Format(", drop %.1f points", 100.0 * drop)};
}

Outcome PretrainingBenefit() {
  const Toy &toy = ToyTask();
  const Clock::time_point start = Clock::now();
  EncoderConfig shallow = toy.config;
  shallow.num_layers = 1;
  EncoderParams pretrained = EncoderParams::Random(shallow, kInitSeed);
  PretrainConfig pc;
  pc.stage_layers = {1, 2};
  pc.stage_steps = StageSteps(2000, 2);
  pc.learning_rate = 3e-3;
  std::vector<Sentence> mono = toy.corpus.mono_src;
  mono.insert(mono.end(), toy.corpus.mono_tgt.begin(), toy.corpus.mono_tgt.end());
  Pretrain(pretrained, mono, toy.corpus.train, toy.vocab, pc);

  TrainConfig config;
  config.steps = 500;
  EncoderParams random = EncoderParams::Random(toy.config, kInitSeed);
  OptimizerState random_state = OptimizerState::Zeros(toy.config);
  FinetuneDualEncoder(random, random_state, toy.corpus.train, toy.vocab, config);
  OptimizerState pretrained_state = OptimizerState::Zeros(pretrained.config);
  FinetuneDualEncoder(pretrained, pretrained_state, toy.corpus.train, toy.vocab, config);
  const double p_random = RetrievalP1(random, toy.vocab, toy.corpus.test, 64);
  const double p_pretrained = RetrievalP1(pretrained, toy.vocab, toy.corpus.test, 64);
  return {p_pretrained > p_random,
          Format("500 fine-tune steps: pretrained P@1 %.4f", p_pretrained) +
              Format(" vs random %.4f", p_random) + Format(" (%.1f s)", Seconds(start))};
}

EmbeddingPool RandomPool(size_t m, size_t d, Rng &rng, const std::string &prefix) {
  std::vector<std::string> ids;
  for (size_t i = 0; i < m; ++i) ids.push_back(prefix + std::to_string(i));
  return EmbeddingPool::FromMatrix(oracle::RandomUnitRows(m, d, rng), ids);
}

Outcome AnnFidelity() {
  const Clock::time_point start = Clock::now();
  Rng rng(108);
  int exact_mismatches = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const size_t m = 1 + rng.Index(2000);
    const size_t d = 1 + rng.Index(32);
    VectorIndex index = VectorIndex::BuildExact(RandomPool(m, d, rng, "v"));
    EmbeddingPool queries = RandomPool(5, d, rng, "q");
    const size_t k = 1 + rng.Index(10);
    for (size_t q = 0; q < queries.size(); ++q) {
      auto want = oracle::BruteForceTopK(index.pool(), queries.row(q), k);
      auto got = index.Search(queries.row(q), k);
      bool same = want.size() == got.size();
      for (size_t i = 0; same && i < got.size(); ++i) {
        same = want[i].first == got[i].id && std::abs(want[i].second - got[i].score) <= 1e-12;
      }
      exact_mismatches += !same;
    }
  }
  EmbeddingPool pool = RandomPool(10000, 16, rng, "v");
  EmbeddingPool queries = RandomPool(1000, 16, rng, "q");
  std::vector<std::string> truth;
  for (size_t q = 0; q < queries.size(); ++q) {
    truth.push_back(oracle::BruteForceTopK(pool, queries.row(q), 1).front().first);
  }
  VectorIndex index = VectorIndex::BuildPartitioned(pool, {64, 16, 20, 1});
  bool monotone = true;
  double previous = 0.0, at16 = 0.0;
  std::string curve;
  for (size_t probes : {1, 2, 4, 8, 16, 32, 64}) {
    size_t hits = 0;
    for (size_t q = 0; q < queries.size(); ++q) {
      hits += index.Search(queries.row(q), 1, probes).front().id == truth[q];
    }
    const double recall = static_cast<double>(hits) / queries.size();
    if (recall < previous) monotone = false;
    previous = recall;
    if (probes == 16) at16 = recall;
    curve += " P" + std::to_string(probes) + "=" + Format("%.3f", recall);
  }
  const double seconds = Seconds(start);
  return {exact_mismatches == 0 && at16 >= 0.95 && monotone && seconds < 60.0,
          std::to_string(exact_mismatches) + " exact mismatches; d=16 recall@1" + curve +
              Format("; %.1f s", seconds)};
}

Outcome BuccOracle() {
  Rng rng(109);
  int agree = 0;
  for (int fixture = 0; fixture < 200; ++fixture) {
    const size_t n_src = 5 + rng.Index(60), n_tgt = 5 + rng.Index(60);
    std::vector<std::pair<std::string, std::string>> gold_pairs;
    for (size_t s = 0; s < n_src; ++s) {
      if (rng.Uniform() < 0.5) {
        gold_pairs.emplace_back("s" + std::to_string(s), "t" + std::to_string(rng.Index(n_tgt)));
      }
    }
    if (gold_pairs.empty()) gold_pairs.emplace_back("s0", "t0");
    std::set<std::pair<std::string, std::string>> gold_set(gold_pairs.begin(), gold_pairs.end());
    const size_t wanted = rng.Index(1001);
    const bool coarse = fixture % 2 == 0;
    std::set<std::pair<std::string, std::string>> used;
    std::vector<Candidate> candidates;
    for (size_t tries = 0; candidates.size() < wanted && tries < 4 * wanted; ++tries) {
      std::pair<std::string, std::string> key =
          rng.Uniform() < 0.3 ? gold_pairs[rng.Index(gold_pairs.size())]
                              : std::pair<std::string, std::string>{
                                    "s" + std::to_string(rng.Index(n_src)),
                                    "t" + std::to_string(rng.Index(n_tgt))};
      if (!used.insert(key).second) continue;
      const double score = coarse ? std::round(rng.Uniform() * 20) / 20 : rng.Uniform(-1, 1);
      candidates.push_back({key.first, key.second, score});
    }
    Prf fast = BuccBestF1(candidates, GoldAlignment::FromPairs(gold_pairs));
    Prf slow = oracle::ExhaustiveBestF1(candidates, gold_set);
    agree += fast.f1 == slow.f1 && fast.threshold == slow.threshold &&
             fast.precision == slow.precision && fast.recall == slow.recall;
  }
  return {agree == 200, std::to_string(agree) + "/200 fixtures match the exhaustive sweep"};
}

Outcome PearsonOracle() {
  Rng rng(110);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 3 + rng.Index(100);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    std::vector<double> gold, model;
    for (size_t i = 0; i < n; ++i) {
      Matrix m = oracle::RandomUnitRows(2, 8, rng);
      pairs.emplace_back(std::vector<double>(m.row(0).begin(), m.row(0).end()),
                         std::vector<double>(m.row(1).begin(), m.row(1).end()));
      model.push_back(1.0 - std::acos(std::clamp(Dot(m.row(0), m.row(1)), -1.0, 1.0)) / M_PI);
      gold.push_back(rng.Uniform(0, 5) + 2.0 * model.back());
    }
    worst = std::max(worst, std::abs(StsPearson(pairs, gold) - oracle::MomentPearson(model, gold)));
  }
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  std::vector<double> same, reversed;
  for (int i = 0; i < 50; ++i) {
    Matrix m = oracle::RandomUnitRows(2, 6, rng);
    pairs.emplace_back(std::vector<double>(m.row(0).begin(), m.row(0).end()),
                       std::vector<double>(m.row(1).begin(), m.row(1).end()));
    same.push_back(1.0 - std::acos(std::clamp(Dot(m.row(0), m.row(1)), -1.0, 1.0)) / M_PI);
    reversed.push_back(-same.back());
  }
  const double plus = StsPearson(pairs, same), minus = StsPearson(pairs, reversed);
  return {worst <= 1e-12 && plus == 1.0 && minus == -1.0,
          Format("max deviation %.3g", worst) + Format(", perfect %.17g", plus) +
              Format(", reversed %.17g", minus)};
}

Outcome Determinism() {
  const fs::path dir = ScratchDir("determinism");
  std::string why;
  auto require = [&](bool ok, const std::string &what) {
    if (!ok && why.empty()) why = what;
  };
  require(RunCli(dir, "synth --out-dir data --train-pairs 2000 --test-pairs 100 --mono 0") == 0,
          "synth failed");
  require(RunCli(dir, "build-vocab --out-dir data --pairs data/train.tsv --size 1000") == 0,
          "build-vocab failed");
  const std::string train =
      "train --vocab data/vocab.txt --pairs data/train.tsv --deterministic --seed 5 ";
  require(RunCli(dir, train + "--steps 100 --out-dir a") == 0, "first train failed");
  require(RunCli(dir, train + "--steps 100 --out-dir b") == 0, "second train failed");
  const std::string first = ReadFile(dir / "a" / "model.ckpt");
  require(!first.empty() && first == ReadFile(dir / "b" / "model.ckpt"),
          "100-step checkpoints differ");

  std::istringstream in(first);
  Checkpoint back = ReadCheckpoint(in);
  std::ostringstream again;
  WriteCheckpoint(again, back.params, back.state ? &*back.state : nullptr);
  require(again.str() == first, "checkpoint save/load/save is not byte-identical");

  require(RunCli(dir, train + "--steps 20 --out-dir full") == 0, "unbroken train failed");
  require(RunCli(dir, train + "--steps 20 --stop-at-step 10 --out-dir part") == 0,
          "interrupted train failed");
  require(RunCli(dir, train + "--steps 20 --resume part/model.ckpt --out-dir part") == 0,
          "resumed train failed");
  require(ReadFile(dir / "full" / "train.log") == ReadFile(dir / "part" / "train.log"),
          "resumed log differs from unbroken log");
  require(ReadFile(dir / "full" / "model.ckpt") == ReadFile(dir / "part" / "model.ckpt"),
          "resumed checkpoint differs from unbroken checkpoint");

  // Parameter trajectories, compared after every one of the 10 resumed steps.
  const Toy &toy = ToyTask();
  EncoderConfig small = toy.config;
  small.hidden_dim = small.embed_dim = 8;
  TrainConfig config;
  config.steps = 20;
  config.batch_size = 16;
  auto trajectory = [&](EncoderParams params, OptimizerState state, int64_t stop) {
    std::vector<std::string> snapshots;
    TrainHooks hooks;
    hooks.checkpoint_every = 1;
    hooks.stop_at_step = stop;
    hooks.on_checkpoint = [&](const EncoderParams &p, const OptimizerState &s) {
      std::ostringstream bytes;
      WriteCheckpoint(bytes, p, &s);
      snapshots.push_back(bytes.str());
    };
    FinetuneDualEncoder(params, state, toy.corpus.train, toy.vocab, config, hooks);
    return snapshots;
  };
  const EncoderParams init = EncoderParams::Random(small, 9);
  std::vector<std::string> unbroken = trajectory(init, OptimizerState::Zeros(small), -1);
  std::vector<std::string> head = trajectory(init, OptimizerState::Zeros(small), 10);
  require(head.size() >= 10, "interrupted library run wrote too few snapshots");
  size_t matched = 0;
  if (head.size() >= 10) {
    std::istringstream saved(head[9]);
    Checkpoint resume = ReadCheckpoint(saved);
    std::vector<std::string> tail = trajectory(resume.params, *resume.state, -1);
    for (size_t i = 0; i < tail.size() && 10 + i < unbroken.size(); ++i) {
      matched += tail[i] == unbroken[10 + i];
    }
  }
  require(matched == 10, "resumed parameters diverge from the unbroken trajectory");
  fs::remove_all(dir);
  return {why.empty(), why.empty() ? "100-step checkpoints identical; round trip identical; "
                                     "10 resumed steps bitwise equal (CLI and per-step)"
                                   : why};
}

Outcome MiningPipeline() {
  const fs::path dir = ScratchDir("mining");
  std::string why;
  auto require = [&](bool ok, const std::string &what) {
    if (!ok && why.empty()) why = what;
  };
  for (const char *run : {"r1", "r2"}) {
    const std::string out = std::string(" --out-dir ") + run;
    require(RunCli(dir, "synth" + out) == 0, "synth failed");
    require(RunCli(dir, std::string("build-vocab --pairs ") + run + "/train.tsv --input " + run +
                            "/mono_src.txt --input " + run + "/mono_tgt.txt --size 1000" + out) ==
                0,
            "build-vocab failed");
    require(RunCli(dir, std::string("train --vocab ") + run + "/vocab.txt --pairs " + run +
                            "/train.tsv --steps 1000 --deterministic" + out) == 0,
            "train failed");
    require(RunCli(dir, std::string("mine --model ") + run + "/model.ckpt --vocab " + run +
                            "/vocab.txt --source " + run + "/test_src.txt --target " + run +
                            "/test_tgt.txt --threshold 0.6 --fraction 0.2 --deterministic" + out) ==
                0,
            "mine failed");
  }
  size_t compared = 0;
  for (const auto &entry : fs::directory_iterator(dir / "r1")) {
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".manifest.json")) continue;
    require(ReadFile(entry.path()) == ReadFile(dir / "r2" / name), name + " differs across runs");
    ++compared;
  }

  std::vector<SentencePair> mined, selected;
  double lowest = 2.0;
  try {
    mined = ReadPairsFile((dir / "r1" / "mined.tsv").string());
    selected = ReadPairsFile((dir / "r1" / "selected.tsv").string());
    std::ifstream model(dir / "r1" / "model.ckpt", std::ios::binary);
    Checkpoint ckpt = ReadCheckpoint(model);
    Vocab vocab = LoadVocabFile((dir / "r1" / "vocab.txt").string());
    for (const SentencePair &p : mined) {
      std::vector<double> u = Encode(ckpt.params, Tokenize(p.src.text, vocab, 64, p.src.lang));
      std::vector<double> v = Encode(ckpt.params, Tokenize(p.tgt.text, vocab, 64, p.tgt.lang));
      lowest = std::min(lowest, Dot(u, v));
    }
  } catch (const Error &e) {
    require(false, std::string("reading outputs: ") + e.what());
  }
  require(!mined.empty(), "nothing mined");
  require(lowest >= 0.6 - 1e-6, "a mined pair has cosine below 0.6");
  require(Dedup(mined) == mined && Dedup(Dedup(mined)) == Dedup(mined), "dedup not idempotent");
  const size_t want = static_cast<size_t>(std::ceil(0.2 * static_cast<double>(mined.size()) - 1e-9));
  require(selected.size() == want, "selection size is not ceil(0.2 n)");
  fs::remove_all(dir);
  return {why.empty(), why.empty() ? std::to_string(mined.size()) + " mined (min cosine " +
                                         Format("%.4f", lowest) + "), " +
                                         std::to_string(selected.size()) + " selected, " +
                                         std::to_string(compared) + " outputs byte-identical"
                                   : why};
}

}  // namespace
}  // namespace bitext

int main() {
  using bitext::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", bitext::GradientCorrectness},
      {"shard equivalence", bitext::ShardEquivalence},
      {"closed-form loss values", bitext::ClosedFormValues},
      {"margin monotonicity and argmax invariance", bitext::MarginAndArgmax},
      {"toy bitext retrieval", bitext::ToyRetrieval},
      {"data-quality degradation", bitext::NoisyDegradation},
      {"pretraining benefit", bitext::PretrainingBenefit},
      {"ANN fidelity", bitext::AnnFidelity},
      {"BUCC sweep oracle", bitext::BuccOracle},
      {"Pearson oracle", bitext::PearsonOracle},
      {"determinism", bitext::Determinism},
      {"mining pipeline", bitext::MiningPipeline},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception &e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s criterion %zu (%s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
