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

#include "bitext/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "bitext/binary_io.h"
#include "bitext/error.h"
#include "bitext/evaluation.h"
#include "bitext/index.h"
#include "bitext/random.h"

namespace bitext {
namespace {

constexpr char kCheckpointMagic[8] = {'B', 'T', 'X', 'C', 'K', 'P', 'T', '1'};

Matrix Rows(const Matrix &m, size_t begin, size_t end) {
  Matrix out(end - begin, m.cols());
  for (size_t i = begin; i < end; ++i) {
    auto src = m.row(i);
    std::copy(src.begin(), src.end(), out.row(i - begin).begin());
  }
  return out;
}

}  // namespace

OptimizerState OptimizerState::Zeros(const EncoderConfig &config) {
  return {EncoderParams::Zeros(config), EncoderParams::Zeros(config), 0};
}

double LinearDecay(double base, int64_t step, int64_t total) {
  if (total <= 0) return base;
  const double remaining = 1.0 - static_cast<double>(step) / static_cast<double>(total);
  return base * std::max(0.0, remaining);
}

void OptimizerStep(EncoderParams &params, const EncoderParams &grads,
                   OptimizerState &state, const OptimizerConfig &config) {
  if (!(params.config == grads.config) || !(params.config == state.first_moment.config)) {
    throw DataError("optimizer: parameter, gradient and state shapes differ");
  }
  const int64_t t = state.step + 1;
  const double lr = LinearDecay(config.learning_rate, state.step, config.total_steps);
  const double correct1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double correct2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));

  EncoderParams next = params;
  OptimizerState next_state = state;
  auto theta = next.Tensors();
  auto g = grads.Tensors();
  auto m = next_state.first_moment.Tensors();
  auto v = next_state.second_moment.Tensors();
  for (size_t i = 0; i < theta.size(); ++i) {
    for (size_t k = 0; k < theta[i].size(); ++k) {
      const double gk = g[i][k];
      m[i][k] = kAdamBeta1 * m[i][k] + (1.0 - kAdamBeta1) * gk;
      v[i][k] = kAdamBeta2 * v[i][k] + (1.0 - kAdamBeta2) * gk * gk;
      const double m_hat = m[i][k] / correct1;
      const double v_hat = v[i][k] / correct2;
      const double update =
          m_hat / (std::sqrt(v_hat) + kAdamEpsilon) + config.weight_decay * theta[i][k];
      theta[i][k] -= lr * update;
      if (!std::isfinite(theta[i][k]) || !std::isfinite(v[i][k])) {
        throw NumericalError("optimizer produced a non-finite value in tensor " +
                             std::to_string(i) + " at step " + std::to_string(t));
      }
    }
  }
  next_state.step = t;
  params = std::move(next);
  state = std::move(next_state);
}

void WriteTrainLogRecord(std::ostream &out, const TrainLogRecord &record) {
  std::ostringstream line;
  line << std::setprecision(10) << "step=" << record.step << "\tloss=" << record.loss
       << "\tlr=" << record.learning_rate << "\tpairs_seen=" << record.pairs_seen;
  if (!record.objective.empty()) line << "\tobjective=" << record.objective;
  if (record.stage > 0) line << "\tstage=" << record.stage;
  out << line.str() << '\n';
}

void TrainConfig::Validate() const {
  if (batch_size < 1 || steps < 0) throw UsageError("batch_size >= 1 and steps >= 0 required");
  if (shards < 1 || batch_size % shards != 0) {
    throw UsageError("batch_size " + std::to_string(batch_size) +
                     " is not divisible by shards " + std::to_string(shards));
  }
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (weight_decay < 0.0) throw UsageError("weight_decay must be non-negative");
  if (max_len < 3) throw UsageError("max_len must be >= 3");
  loss().Validate();
}

std::vector<size_t> SampleBatch(size_t n, size_t batch_size, uint64_t seed, int64_t step) {
  if (batch_size > n) {
    throw DataError("batch of " + std::to_string(batch_size) + " exceeds corpus of " +
                    std::to_string(n) + " pairs");
  }
  Rng rng(MixSeed(seed, static_cast<uint64_t>(step)));
  std::vector<size_t> batch;
  std::unordered_set<size_t> taken;
  while (batch.size() < batch_size) {
    size_t i = rng.Index(n);
    if (taken.insert(i).second) batch.push_back(i);
  }
  return batch;
}

LossAndGrad DualEncoderLossAndGrad(const EncoderParams &params,
                                   const std::vector<TokenSequence> &sources,
                                   const std::vector<TokenSequence> &targets,
                                   const TrainConfig &config,
                                   const std::vector<TokenSequence> *extra_targets) {
  std::vector<ForwardCache> src_cache, tgt_cache, extra_cache;
  const Matrix x = EncodeBatchRaw(params, sources, &src_cache);
  const Matrix y = EncodeBatchRaw(params, targets, &tgt_cache);
  Matrix extra;
  const bool has_extra = extra_targets != nullptr && !extra_targets->empty();
  if (has_extra) extra = EncodeBatchRaw(params, *extra_targets, &extra_cache);

  const size_t n = x.rows();
  const LossConfig loss_config = config.loss();
  LossAndGrad out{0.0, EncoderParams::Zeros(params.config)};
  Matrix dx(n, x.cols()), dy(n, y.cols()), de(extra.rows(), extra.cols());

  if (config.negatives == NegativeScope::kLocal && config.shards > 1) {
    // Each shard ranks only against its own items (no broadcast).
    const size_t k = static_cast<size_t>(config.shards);
    const size_t per = n / k;
    for (size_t s = 0; s < k; ++s) {
      EmbeddingGrads g = BidirectionalLossGrad(Rows(x, s * per, (s + 1) * per),
                                               Rows(y, s * per, (s + 1) * per),
                                               loss_config, has_extra ? &extra : nullptr);
      out.loss += g.loss / static_cast<double>(k);
      for (size_t i = 0; i < per; ++i) {
        for (size_t c = 0; c < x.cols(); ++c) {
          dx(s * per + i, c) = g.d_source(i, c) / static_cast<double>(k);
          dy(s * per + i, c) = g.d_target(i, c) / static_cast<double>(k);
        }
      }
      for (size_t i = 0; i < de.size(); ++i) {
        de.values()[i] += g.d_extra.values()[i] / static_cast<double>(k);
      }
    }
  } else {
    // With the broadcast every shard sees the full column space, so the
    // sharded loss is the full-batch loss.
    EmbeddingGrads g = BidirectionalLossGrad(x, y, loss_config, has_extra ? &extra : nullptr);
    out.loss = g.loss;
    dx = std::move(g.d_source);
    dy = std::move(g.d_target);
    if (has_extra) de = std::move(g.d_extra);
  }

  for (size_t i = 0; i < n; ++i) {
    BackwardSentence(params, src_cache[i], dx.row(i), out.grads);
    BackwardSentence(params, tgt_cache[i], dy.row(i), out.grads);
  }
  for (size_t i = 0; i < extra_cache.size(); ++i) {
    BackwardSentence(params, extra_cache[i], de.row(i), out.grads);
  }
  return out;
}

void FinetuneDualEncoder(EncoderParams &params, OptimizerState &state,
                         const std::vector<SentencePair> &pairs, const Vocab &vocab,
                         const TrainConfig &config, const TrainHooks &hooks,
                         const HardNegativeSet *hard_negatives) {
  config.Validate();
  if (!(state.first_moment.config == params.config)) {
    throw DataError("optimizer state does not match the encoder");
  }
  const size_t max_len = static_cast<size_t>(
      std::min<int64_t>(config.max_len, params.config.max_seq_len));
  std::vector<TokenSequence> src, tgt;
  for (const SentencePair &p : pairs) {
    src.push_back(Tokenize(p.src.text, vocab, max_len, p.src.lang));
    tgt.push_back(Tokenize(p.tgt.text, vocab, max_len, p.tgt.lang));
  }
  const OptimizerConfig opt{config.learning_rate, config.weight_decay, config.steps};

  while (state.step < config.steps) {
    if (hooks.stop_at_step >= 0 && state.step >= hooks.stop_at_step) return;
    const std::vector<size_t> batch =
        SampleBatch(pairs.size(), static_cast<size_t>(config.batch_size), config.seed, state.step);
    std::vector<TokenSequence> xs, ys, extra;
    std::vector<SentencePair> batch_pairs;
    for (size_t i : batch) {
      xs.push_back(src[i]);
      ys.push_back(tgt[i]);
      batch_pairs.push_back(pairs[i]);
    }
    if (hard_negatives != nullptr && hard_negatives->per_source > 0) {
      AugmentedBatch aug = AugmentWithHardNegatives(batch_pairs, *hard_negatives);
      for (const Sentence &s : aug.extra_targets) {
        extra.push_back(Tokenize(s.text, vocab, max_len, s.lang));
      }
    }
    const double lr = LinearDecay(config.learning_rate, state.step, config.steps);
    LossAndGrad lg = DualEncoderLossAndGrad(params, xs, ys, config, extra.empty() ? nullptr : &extra);
    OptimizerStep(params, lg.grads, state, opt);
    if (hooks.on_step) {
      hooks.on_step({state.step, lg.loss, lr, state.step * config.batch_size, "ranking", 0});
    }
    if (hooks.on_checkpoint &&
        ((hooks.checkpoint_every > 0 && state.step % hooks.checkpoint_every == 0) ||
         state.step == config.steps)) {
      hooks.on_checkpoint(params, state);
    }
  }
}

void PretrainConfig::Validate() const {
  if (stage_layers.empty() || stage_layers.size() != stage_steps.size()) {
    throw UsageError("pretraining needs one step count per stage");
  }
  for (size_t i = 0; i < stage_layers.size(); ++i) {
    if (stage_layers[i] < 1 || stage_steps[i] < 0) throw UsageError("invalid stage");
    if (i > 0 && stage_layers[i] % stage_layers[i - 1] != 0) {
      throw UsageError("stage layer counts must each divide the next");
    }
  }
  if (batch_size < 1 || !(learning_rate > 0.0) || max_len < 3) {
    throw UsageError("invalid pretraining batch size, learning rate or max_len");
  }
  if (mlm_per_cycle < 0 || tlm_per_cycle < 0 || mlm_per_cycle + tlm_per_cycle == 0) {
    throw UsageError("MLM/TLM mixing ratio needs a positive total");
  }
  if (!(mask.fraction > 0.0 && mask.fraction <= 1.0) || mask.cap < 1) {
    throw UsageError("invalid mask plan");
  }
}

std::vector<int64_t> StageSteps(int64_t total, size_t num_stages) {
  static const double kWeights[] = {1.0, 2.0, 4.5};
  if (num_stages == 0) return {};
  std::vector<double> weights;
  for (size_t i = 0; i < num_stages; ++i) {
    const size_t from_end = num_stages - 1 - i;
    weights.push_back(from_end < 3 ? kWeights[2 - from_end] : 1.0);
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<int64_t> steps;
  int64_t assigned = 0;
  for (size_t i = 0; i + 1 < num_stages; ++i) {
    steps.push_back(static_cast<int64_t>(std::llround(total * weights[i] / sum)));
    assigned += steps.back();
  }
  steps.push_back(std::max<int64_t>(0, total - assigned));
  return steps;
}

void Pretrain(EncoderParams &params, const std::vector<Sentence> &mono,
              const std::vector<SentencePair> &pairs, const Vocab &vocab,
              const PretrainConfig &config, const TrainHooks &hooks) {
  config.Validate();
  if (params.config.num_layers != config.stage_layers.front()) {
    throw UsageError("initial encoder has " + std::to_string(params.config.num_layers) +
                     " layers but the first stage needs " +
                     std::to_string(config.stage_layers.front()));
  }
  const size_t max_len = static_cast<size_t>(
      std::min<int64_t>(config.max_len, params.config.max_seq_len));
  std::vector<TokenSequence> mono_tokens, tlm_tokens;
  for (const Sentence &s : mono) {
    TokenSequence t = Tokenize(s.text, vocab, max_len, s.lang);
    if (t.ids.size() > 2) mono_tokens.push_back(std::move(t));
  }
  for (const SentencePair &p : pairs) tlm_tokens.push_back(TlmSequence(p, vocab, max_len));
  if (mono_tokens.empty() && tlm_tokens.empty()) {
    throw DataError("pretraining needs monolingual or bilingual text");
  }
  const int64_t cycle = config.mlm_per_cycle + config.tlm_per_cycle;
  int64_t sequences_seen = 0;
  int64_t global_step = 0;

  for (size_t stage = 0; stage < config.stage_layers.size(); ++stage) {
    if (stage > 0) params = StackGrow(params, config.stage_layers[stage]);
    const int64_t steps = config.stage_steps[stage];
    OptimizerState state = OptimizerState::Zeros(params.config);
    const OptimizerConfig opt{config.learning_rate, config.weight_decay, steps};
    const uint64_t stage_seed = MixSeed(config.seed, 1000003 * (stage + 1));

    for (int64_t step = 0; step < steps; ++step) {
      bool use_mlm = (step % cycle) < config.mlm_per_cycle;
      if (mono_tokens.empty()) use_mlm = false;
      if (tlm_tokens.empty()) use_mlm = true;
      const std::vector<TokenSequence> &source = use_mlm ? mono_tokens : tlm_tokens;
      const size_t batch_size = std::min<size_t>(config.batch_size, source.size());
      const std::vector<size_t> batch = SampleBatch(source.size(), batch_size, stage_seed, step);
      Rng mask_rng(MixSeed(stage_seed ^ 0x5bd1e995ULL, static_cast<uint64_t>(step)));
      std::vector<MaskedSequence> masked;
      for (size_t i : batch) masked.push_back(MaskTokens(source[i], config.mask, mask_rng));

      const double lr = LinearDecay(config.learning_rate, state.step, steps);
      LossAndGrad lg = MlmLossAndGrad(params, masked);
      OptimizerStep(params, lg.grads, state, opt);
      sequences_seen += static_cast<int64_t>(batch.size());
      ++global_step;
      if (hooks.on_step) {
        hooks.on_step({global_step, lg.loss, lr, sequences_seen, use_mlm ? "mlm" : "tlm",
                       static_cast<int64_t>(stage + 1)});
      }
    }
    if (hooks.on_checkpoint) hooks.on_checkpoint(params, state);
  }
}

double RetrievalP1(const EncoderParams &params, const Vocab &vocab,
                   const std::vector<SentencePair> &test, size_t max_len) {
  std::vector<TokenSequence> src, tgt;
  std::vector<std::string> src_ids, tgt_ids;
  std::vector<std::pair<std::string, std::string>> gold;
  for (size_t i = 0; i < test.size(); ++i) {
    src.push_back(Tokenize(test[i].src.text, vocab, max_len, test[i].src.lang));
    tgt.push_back(Tokenize(test[i].tgt.text, vocab, max_len, test[i].tgt.lang));
    src_ids.push_back("s" + std::to_string(i));
    tgt_ids.push_back("t" + std::to_string(i));
    gold.emplace_back(src_ids.back(), tgt_ids.back());
  }
  const EmbeddingPool queries = EmbeddingPool::FromMatrix(EncodeBatch(params, src), src_ids);
  const VectorIndex index =
      VectorIndex::BuildExact(EmbeddingPool::FromMatrix(EncodeBatch(params, tgt), tgt_ids));
  return PrecisionAt1(queries, index, GoldAlignment::FromPairs(std::move(gold)));
}

void WriteCheckpoint(std::ostream &out, const EncoderParams &params,
                     const OptimizerState *state) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  WriteParams(out, params);
  WriteU64(out, state != nullptr ? 1 : 0);
  if (state == nullptr) return;
  WriteU64(out, static_cast<uint64_t>(state->step));
  for (auto t : state->first_moment.Tensors()) WriteF64s(out, t);
  for (auto t : state->second_moment.Tensors()) WriteF64s(out, t);
}

Checkpoint ReadCheckpoint(std::istream &in, const EncoderConfig *expected) {
  BinaryReader reader(in);
  char magic[sizeof(kCheckpointMagic)];
  reader.ReadBytes(magic, sizeof(magic), "checkpoint magic");
  if (!std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw DataError("not a checkpoint (bad magic at byte offset 0)");
  }
  Checkpoint ckpt{ReadParams(reader), std::nullopt};
  if (expected != nullptr && !(ckpt.params.config == *expected)) {
    throw DataError("checkpoint config does not match the expected encoder config");
  }
  const uint64_t has_state = reader.ReadU64("optimizer flag");
  if (has_state > 1) {
    throw DataError("bad optimizer flag at byte offset " + std::to_string(reader.offset() - 8));
  }
  if (has_state == 1) {
    OptimizerState state = OptimizerState::Zeros(ckpt.params.config);
    state.step = static_cast<int64_t>(reader.ReadU64("optimizer step"));
    for (auto t : state.first_moment.Tensors()) reader.ReadF64s(t, "first moment");
    for (auto t : state.second_moment.Tensors()) reader.ReadF64s(t, "second moment");
    ckpt.state = std::move(state);
  }
  reader.ExpectEnd();
  return ckpt;
}

void SaveCheckpoint(const std::string &path, const EncoderParams &params,
                    const OptimizerState *state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  WriteCheckpoint(out, params, state);
  if (!out) throw DataError("failed writing " + path);
}

Checkpoint LoadCheckpoint(const std::string &path, const EncoderConfig *expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return ReadCheckpoint(in, expected);
  } catch (const Error &e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace bitext
