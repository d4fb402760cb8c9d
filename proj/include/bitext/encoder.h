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

#ifndef BITEXT_ENCODER_H_
#define BITEXT_ENCODER_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bitext/binary_io.h"
#include "bitext/corpus.h"
#include "bitext/matrix.h"
#include "bitext/random.h"
#include "bitext/vocab.h"

namespace bitext {

enum class Pooling : int64_t {
  kMeanContent = 0,  // mean over non-special positions
  kCls = 1,          // hidden state at the [CLS] position
};

struct EncoderConfig {
  int64_t vocab_size = 0;
  int64_t hidden_dim = 32;
  int64_t num_layers = 2;
  int64_t max_seq_len = 64;
  int64_t embed_dim = 32;
  Pooling pooling = Pooling::kMeanContent;
  // MLM logits reuse token_embeddings (requires embed_dim == hidden_dim).
  bool tie_mlm_head = false;

  void Validate() const;
  bool operator==(const EncoderConfig &) const = default;
};

// One residual block applied at every position t:
//   h'_t = h_t + tanh(W h_t + U c + b),  c = mean_s h_s
// The context term is the only place positions interact.
struct LayerParams {
  Matrix w;               // d x d
  Matrix u;               // d x d
  std::vector<double> b;  // d

  bool operator==(const LayerParams &) const = default;
};

struct EncoderParams {
  EncoderConfig config;
  Matrix token_embeddings;  // V x d
  std::vector<LayerParams> layers;
  Matrix projection;                    // e x d
  std::vector<double> projection_bias;  // e
  Matrix mlm_weights;                   // V x e, or empty when tied
  std::vector<double> mlm_bias;         // V

  // All-zero parameters of the right shapes. Zero layers are identity maps.
  static EncoderParams Zeros(const EncoderConfig &config);
  static EncoderParams Random(const EncoderConfig &config, uint64_t seed);

  // Parameter tensors in checkpoint order: embeddings, then per layer
  // (w, u, b), then projection, projection bias, mlm weights, mlm bias.
  std::vector<std::span<double>> Tensors();
  std::vector<std::span<const double>> Tensors() const;
  size_t ParameterCount() const;

  bool operator==(const EncoderParams &) const = default;
};

// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
  std::vector<int> ids;
  std::vector<Matrix> hidden;                 // num_layers + 1 states, T x d
  std::vector<Matrix> activations;            // tanh outputs per layer
  std::vector<std::vector<double>> contexts;  // per-layer context means
  std::vector<size_t> pooled_positions;
  std::vector<double> pooled;     // d
  std::vector<double> projected;  // e, before normalization
};

// Runs the encoder. PAD ids are dropped before anything else, so trailing
// padding has no effect.
ForwardCache Forward(const EncoderParams &params, std::span<const int> ids);

// Unit-norm sentence embedding.
std::vector<double> Encode(const EncoderParams &params,
                           const TokenSequence &tokens);

// Row i is Encode(batch[i]).
Matrix EncodeBatch(const EncoderParams &params,
                   const std::vector<TokenSequence> &batch);

// Projected, not yet normalized, sentence vectors.
Matrix EncodeBatchRaw(const EncoderParams &params,
                      const std::vector<TokenSequence> &batch,
                      std::vector<ForwardCache> *caches = nullptr);

// Accumulates into `grads` the gradient of a loss whose derivative with
// respect to the projected (pre-normalization) sentence vector is `d_projected`.
void BackwardSentence(const EncoderParams &params, const ForwardCache &cache,
                      std::span<const double> d_projected,
                      EncoderParams &grads);

// Duplicates the layer stack: output layer j copies input layer j mod L.
EncoderParams StackGrow(const EncoderParams &params, int64_t target_layers);

// Layer counts of a progressive stacking schedule ending at `num_layers`:
// (L/4, L/2, L) when 4 divides L, (L/2, L) when 2 does, else (L).
std::vector<int64_t> DefaultStageLayers(int64_t num_layers);

inline constexpr double kDefaultMaskFraction = 0.2;
inline constexpr int64_t kDefaultMaskCap = 80;

struct MaskPlan {
  double fraction = kDefaultMaskFraction;
  int64_t cap = kDefaultMaskCap;
};

// Number of positions masked in a sequence with `content` maskable tokens.
int64_t MaskCount(int64_t content, const MaskPlan &plan);

struct MaskedSequence {
  std::vector<int> ids;  // with [MASK] substituted
  std::vector<size_t> positions;
  std::vector<int> targets;  // original ids at `positions`
};

// Replaces min(ceil(fraction * n), cap) non-special positions with [MASK].
MaskedSequence MaskTokens(const TokenSequence &tokens, const MaskPlan &plan,
                          Rng &rng);

// [CLS] src [SEP] tgt [SEP] with no language marker. An empty target gives
// the plain [CLS] src [SEP] layout. Over-long inputs lose tokens from the
// end of the longer segment.
TokenSequence TlmSequence(const SentencePair &pair, const Vocab &vocab,
                          size_t max_len);

struct LossAndGrad {
  double loss = 0.0;
  EncoderParams grads;
};

// Mean cross-entropy of the MLM head over all masked positions of the batch.
LossAndGrad MlmLossAndGrad(const EncoderParams &params,
                           const std::vector<MaskedSequence> &batch);

// Binary parameter stream: magic, config integers, then every tensor as
// little-endian 64-bit floats.
void WriteParams(std::ostream &out, const EncoderParams &params);
EncoderParams ReadParams(std::istream &in);
EncoderParams ReadParams(BinaryReader &reader);

}  // namespace bitext

#endif  // BITEXT_ENCODER_H_
