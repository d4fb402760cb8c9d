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

#ifndef BITEXT_TRAINER_H_
#define BITEXT_TRAINER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bitext/corpus.h"
#include "bitext/encoder.h"
#include "bitext/loss.h"
#include "bitext/negatives.h"
#include "bitext/vocab.h"

namespace bitext {

// Adaptive-moment constants.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct OptimizerState {
  EncoderParams first_moment;
  EncoderParams second_moment;
  int64_t step = 0;

  static OptimizerState Zeros(const EncoderConfig &config);
  bool operator==(const OptimizerState &) const = default;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  int64_t total_steps = 1;  // horizon of the linear decay to zero
};

// Learning rate after `step` updates: base * (1 - step / total), floored at 0.
double LinearDecay(double base, int64_t step, int64_t total);

// One AdamW update with decoupled weight decay:
//   theta -= lr_t * (m_hat / (sqrt(v_hat) + eps) + lambda * theta)
// On a non-finite result nothing is modified and NumericalError is thrown.
void OptimizerStep(EncoderParams &params, const EncoderParams &grads,
                   OptimizerState &state, const OptimizerConfig &config);

struct TrainLogRecord {
  int64_t step = 0;  // 1-based index of the completed update
  double loss = 0.0;
  double learning_rate = 0.0;
  int64_t pairs_seen = 0;
  std::string objective;  // "ranking", "mlm" or "tlm"
  int64_t stage = 0;
};

// tab-separated step=..., loss=..., lr=..., pairs_seen=... record.
void WriteTrainLogRecord(std::ostream &out, const TrainLogRecord &record);

struct TrainHooks {
  std::function<void(const TrainLogRecord &)> on_step;
  // Called after every `checkpoint_every` updates and after the last one.
  std::function<void(const EncoderParams &, const OptimizerState &)> on_checkpoint;
  int64_t checkpoint_every = 0;
  // Stop once state.step reaches this value (for interrupted runs); -1 = never.
  int64_t stop_at_step = -1;
};

struct TrainConfig {
  int64_t batch_size = 64;
  int64_t steps = 2000;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double margin = kDefaultMargin;
  double scale = kDefaultScale;
  ScaleMode scale_mode = ScaleMode::kSimilarity;
  int64_t shards = 1;
  NegativeScope negatives = NegativeScope::kBroadcast;
  uint64_t seed = 1;
  int64_t max_len = 64;

  void Validate() const;
  LossConfig loss() const { return {margin, scale, scale_mode}; }
};

// Deterministic batch of distinct indices in [0, n) for a given step.
std::vector<size_t> SampleBatch(size_t n, size_t batch_size, uint64_t seed, int64_t step);

// Loss and parameter gradient of one dual-encoder batch. Both sides go
// through the same parameters. `extra_targets` are appended negatives.
LossAndGrad DualEncoderLossAndGrad(const EncoderParams &params,
                                   const std::vector<TokenSequence> &sources,
                                   const std::vector<TokenSequence> &targets,
                                   const TrainConfig &config,
                                   const std::vector<TokenSequence> *extra_targets = nullptr);

// Runs updates state.step .. config.steps - 1 over uniformly sampled
// batches of `pairs`, so a run resumed from a checkpoint continues exactly
// where the original would have been.
void FinetuneDualEncoder(EncoderParams &params, OptimizerState &state,
                         const std::vector<SentencePair> &pairs, const Vocab &vocab,
                         const TrainConfig &config, const TrainHooks &hooks = {},
                         const HardNegativeSet *hard_negatives = nullptr);

struct PretrainConfig {
  std::vector<int64_t> stage_layers;  // e.g. {L/4, L/2, L}
  std::vector<int64_t> stage_steps;   // same length as stage_layers
  int64_t batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  uint64_t seed = 1;
  MaskPlan mask;
  int64_t mlm_per_cycle = 1;  // MLM batches per TLM batch
  int64_t tlm_per_cycle = 1;
  int64_t max_len = 64;

  void Validate() const;
};

// Splits `total` steps across stages in proportion 1 : 2 : 4.5 for the
// L/4, L/2 and L stages (shorter schedules keep the trailing ratios).
std::vector<int64_t> StageSteps(int64_t total, size_t num_stages);

// Progressive stacking: trains `params` (which must have
// stage_layers.front() layers) with alternating MLM and TLM batches, then
// duplicates its layers into the next stage. Each stage gets a fresh
// optimizer. On divergence `params` keeps the last finite state.
void Pretrain(EncoderParams &params, const std::vector<Sentence> &mono,
              const std::vector<SentencePair> &pairs, const Vocab &vocab,
              const PretrainConfig &config, const TrainHooks &hooks = {});

// P@1 of sources retrieving their own targets among all test targets.
double RetrievalP1(const EncoderParams &params, const Vocab &vocab,
                   const std::vector<SentencePair> &test, size_t max_len);

struct Checkpoint {
  EncoderParams params;
  std::optional<OptimizerState> state;
};

// "BTXCKPT1", the parameter stream, a state flag, then step and both moment
// tensors when present.
void WriteCheckpoint(std::ostream &out, const EncoderParams &params,
                     const OptimizerState *state);
Checkpoint ReadCheckpoint(std::istream &in, const EncoderConfig *expected = nullptr);
void SaveCheckpoint(const std::string &path, const EncoderParams &params,
                    const OptimizerState *state);
Checkpoint LoadCheckpoint(const std::string &path, const EncoderConfig *expected = nullptr);

}  // namespace bitext

#endif  // BITEXT_TRAINER_H_
