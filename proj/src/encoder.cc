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

#include "bitext/encoder.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "bitext/binary_io.h"
#include "bitext/error.h"

namespace bitext {
namespace {

constexpr char kParamsMagic[8] = {'B', 'T', 'X', 'P', 'A', 'R', 'M', '1'};

// y += A x
void MatVecAdd(const Matrix &a, std::span<const double> x, std::span<double> y) {
  for (size_t r = 0; r < a.rows(); ++r) y[r] += Dot(a.row(r), x);
}

// y += A^T x
void MatTVecAdd(const Matrix &a, std::span<const double> x, std::span<double> y) {
  for (size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = a.row(r);
    for (size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * xr;
  }
}

// A += x y^T
void OuterAdd(Matrix &a, std::span<const double> x, std::span<const double> y) {
  for (size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = a.row(r);
    for (size_t c = 0; c < a.cols(); ++c) row[c] += xr * y[c];
  }
}

void FillUniform(std::span<double> values, double scale, Rng &rng) {
  for (double &v : values) v = rng.Uniform(-scale, scale);
}

bool IsContentId(int id) { return id != Vocab::kCls && id != Vocab::kSep; }

}  // namespace

void EncoderConfig::Validate() const {
  if (vocab_size <= Vocab::kNumSpecial || hidden_dim <= 0 || num_layers < 1 ||
      max_seq_len < 3 || embed_dim <= 0) {
    throw UsageError("invalid encoder config: vocab_size=" +
                     std::to_string(vocab_size) + " hidden_dim=" +
                     std::to_string(hidden_dim) + " num_layers=" +
                     std::to_string(num_layers) + " max_seq_len=" +
                     std::to_string(max_seq_len) + " embed_dim=" +
                     std::to_string(embed_dim));
  }
  if (pooling != Pooling::kMeanContent && pooling != Pooling::kCls) {
    throw UsageError("invalid pooling mode");
  }
  if (tie_mlm_head && embed_dim != hidden_dim) {
    throw UsageError("tie_mlm_head requires embed_dim == hidden_dim");
  }
}

EncoderParams EncoderParams::Zeros(const EncoderConfig &config) {
  config.Validate();
  const size_t v = config.vocab_size, d = config.hidden_dim, e = config.embed_dim;
  EncoderParams p;
  p.config = config;
  p.token_embeddings = Matrix(v, d);
  p.layers.resize(config.num_layers);
  for (LayerParams &layer : p.layers) {
    layer.w = Matrix(d, d);
    layer.u = Matrix(d, d);
    layer.b.assign(d, 0.0);
  }
  p.projection = Matrix(e, d);
  p.projection_bias.assign(e, 0.0);
  p.mlm_weights = config.tie_mlm_head ? Matrix(0, 0) : Matrix(v, e);
  p.mlm_bias.assign(v, 0.0);
  return p;
}

EncoderParams EncoderParams::Random(const EncoderConfig &config, uint64_t seed) {
  EncoderParams p = Zeros(config);
  Rng rng(seed);
  const double d = static_cast<double>(config.hidden_dim);
  FillUniform(p.token_embeddings.values(), 1.0, rng);
  for (LayerParams &layer : p.layers) {
    FillUniform(layer.w.values(), 0.5 / std::sqrt(d), rng);
    FillUniform(layer.u.values(), 0.5 / std::sqrt(d), rng);
  }
  FillUniform(p.projection.values(), std::sqrt(3.0 / d), rng);
  FillUniform(p.mlm_weights.values(), 0.01, rng);
  return p;
}

std::vector<std::span<double>> EncoderParams::Tensors() {
  std::vector<std::span<double>> out;
  out.push_back(token_embeddings.values());
  for (LayerParams &layer : layers) {
    out.push_back(layer.w.values());
    out.push_back(layer.u.values());
    out.push_back(layer.b);
  }
  out.push_back(projection.values());
  out.push_back(projection_bias);
  out.push_back(mlm_weights.values());
  out.push_back(mlm_bias);
  return out;
}

std::vector<std::span<const double>> EncoderParams::Tensors() const {
  std::vector<std::span<const double>> out;
  for (std::span<double> t : const_cast<EncoderParams *>(this)->Tensors()) {
    out.emplace_back(t.data(), t.size());
  }
  return out;
}

size_t EncoderParams::ParameterCount() const {
  size_t n = 0;
  for (auto t : Tensors()) n += t.size();
  return n;
}

ForwardCache Forward(const EncoderParams &params, std::span<const int> ids) {
  const EncoderConfig &config = params.config;
  const size_t d = config.hidden_dim;

  ForwardCache cache;
  for (int id : ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " outside vocab of " +
                      std::to_string(config.vocab_size));
    }
    if (id != Vocab::kPad) cache.ids.push_back(id);
  }
  const size_t n = cache.ids.size();
  if (n == 0) throw DataError("cannot encode an empty token sequence");
  if (n > static_cast<size_t>(config.max_seq_len)) {
    throw DataError("sequence of " + std::to_string(n) +
                    " tokens exceeds max_seq_len " +
                    std::to_string(config.max_seq_len));
  }

  Matrix h(n, d);
  for (size_t t = 0; t < n; ++t) {
    auto src = params.token_embeddings.row(cache.ids[t]);
    std::copy(src.begin(), src.end(), h.row(t).begin());
  }
  cache.hidden.push_back(h);

  for (const LayerParams &layer : params.layers) {
    const Matrix &in = cache.hidden.back();
    std::vector<double> context(d, 0.0);
    for (size_t t = 0; t < n; ++t) {
      for (size_t k = 0; k < d; ++k) context[k] += in(t, k);
    }
    for (double &c : context) c /= static_cast<double>(n);

    std::vector<double> shared(layer.b);
    MatVecAdd(layer.u, context, shared);

    Matrix act(n, d);
    Matrix out(n, d);
    for (size_t t = 0; t < n; ++t) {
      auto a = act.row(t);
      std::copy(shared.begin(), shared.end(), a.begin());
      MatVecAdd(layer.w, in.row(t), a);
      for (size_t k = 0; k < d; ++k) {
        a[k] = std::tanh(a[k]);
        out(t, k) = in(t, k) + a[k];
      }
    }
    cache.contexts.push_back(std::move(context));
    cache.activations.push_back(std::move(act));
    cache.hidden.push_back(std::move(out));
  }

  if (config.pooling == Pooling::kCls) {
    cache.pooled_positions = {0};
  } else {
    for (size_t t = 0; t < n; ++t) {
      if (IsContentId(cache.ids[t])) cache.pooled_positions.push_back(t);
    }
    if (cache.pooled_positions.empty()) {
      cache.pooled_positions.resize(n);
      std::iota(cache.pooled_positions.begin(), cache.pooled_positions.end(), 0);
    }
  }
  const Matrix &last = cache.hidden.back();
  cache.pooled.assign(d, 0.0);
  for (size_t t : cache.pooled_positions) {
    for (size_t k = 0; k < d; ++k) cache.pooled[k] += last(t, k);
  }
  for (double &v : cache.pooled) {
    v /= static_cast<double>(cache.pooled_positions.size());
  }

  cache.projected = params.projection_bias;
  MatVecAdd(params.projection, cache.pooled, cache.projected);
  return cache;
}

std::vector<double> Encode(const EncoderParams &params,
                           const TokenSequence &tokens) {
  std::vector<double> v = Forward(params, tokens.ids).projected;
  double norm = std::sqrt(Dot(v, v));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericalError("degenerate sentence vector (norm " +
                         std::to_string(norm) + ")");
  }
  for (double &x : v) x /= norm;
  return v;
}

Matrix EncodeBatch(const EncoderParams &params,
                   const std::vector<TokenSequence> &batch) {
  Matrix out(batch.size(), params.config.embed_dim);
  for (size_t i = 0; i < batch.size(); ++i) {
    std::vector<double> v = Encode(params, batch[i]);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

Matrix EncodeBatchRaw(const EncoderParams &params,
                      const std::vector<TokenSequence> &batch,
                      std::vector<ForwardCache> *caches) {
  Matrix out(batch.size(), params.config.embed_dim);
  if (caches != nullptr) caches->clear();
  for (size_t i = 0; i < batch.size(); ++i) {
    ForwardCache cache = Forward(params, batch[i].ids);
    std::copy(cache.projected.begin(), cache.projected.end(), out.row(i).begin());
    if (caches != nullptr) caches->push_back(std::move(cache));
  }
  return out;
}

namespace {

// Backpropagates dL/d(last hidden state) through the layer stack into the
// layer and embedding gradients.
void BackwardLayers(const EncoderParams &params, const ForwardCache &cache,
                    Matrix d_hidden, EncoderParams &grads) {
  const size_t n = cache.ids.size();
  const size_t d = params.config.hidden_dim;
  for (size_t l = params.layers.size(); l-- > 0;) {
    const LayerParams &layer = params.layers[l];
    LayerParams &g = grads.layers[l];
    const Matrix &in = cache.hidden[l];
    const Matrix &act = cache.activations[l];

    Matrix d_act(n, d);
    std::vector<double> d_act_sum(d, 0.0);
    for (size_t t = 0; t < n; ++t) {
      for (size_t k = 0; k < d; ++k) {
        double a = act(t, k);
        double v = d_hidden(t, k) * (1.0 - a * a);
        d_act(t, k) = v;
        d_act_sum[k] += v;
      }
      OuterAdd(g.w, d_act.row(t), in.row(t));
    }
    OuterAdd(g.u, d_act_sum, cache.contexts[l]);
    for (size_t k = 0; k < d; ++k) g.b[k] += d_act_sum[k];

    std::vector<double> d_context(d, 0.0);
    MatTVecAdd(layer.u, d_act_sum, d_context);
    for (double &v : d_context) v /= static_cast<double>(n);

    // Residual path keeps d_hidden; add the block's contributions.
    for (size_t t = 0; t < n; ++t) {
      auto row = d_hidden.row(t);
      MatTVecAdd(layer.w, d_act.row(t), row);
      for (size_t k = 0; k < d; ++k) row[k] += d_context[k];
    }
  }
  for (size_t t = 0; t < n; ++t) {
    auto dst = grads.token_embeddings.row(cache.ids[t]);
    auto src = d_hidden.row(t);
    for (size_t k = 0; k < d; ++k) dst[k] += src[k];
  }
}

}  // namespace

void BackwardSentence(const EncoderParams &params, const ForwardCache &cache,
                      std::span<const double> d_projected,
                      EncoderParams &grads) {
  const size_t d = params.config.hidden_dim;
  OuterAdd(grads.projection, d_projected, cache.pooled);
  for (size_t k = 0; k < d_projected.size(); ++k) {
    grads.projection_bias[k] += d_projected[k];
  }
  std::vector<double> d_pooled(d, 0.0);
  MatTVecAdd(params.projection, d_projected, d_pooled);

  Matrix d_hidden(cache.ids.size(), d);
  const double share = 1.0 / static_cast<double>(cache.pooled_positions.size());
  for (size_t t : cache.pooled_positions) {
    for (size_t k = 0; k < d; ++k) d_hidden(t, k) += d_pooled[k] * share;
  }
  BackwardLayers(params, cache, std::move(d_hidden), grads);
}

EncoderParams StackGrow(const EncoderParams &params, int64_t target_layers) {
  const int64_t layers = params.config.num_layers;
  if (target_layers < layers || target_layers % layers != 0) {
    throw UsageError("stack target of " + std::to_string(target_layers) +
                     " layers is not a multiple of " + std::to_string(layers));
  }
  EncoderParams out = params;
  out.config.num_layers = target_layers;
  out.layers.clear();
  for (int64_t j = 0; j < target_layers; ++j) {
    out.layers.push_back(params.layers[j % layers]);
  }
  return out;
}

std::vector<int64_t> DefaultStageLayers(int64_t num_layers) {
  if (num_layers % 4 == 0) return {num_layers / 4, num_layers / 2, num_layers};
  if (num_layers % 2 == 0) return {num_layers / 2, num_layers};
  return {num_layers};
}

int64_t MaskCount(int64_t content, const MaskPlan &plan) {
  if (content <= 0) return 0;
  auto wanted = static_cast<int64_t>(std::ceil(plan.fraction * content - 1e-9));
  return std::clamp<int64_t>(std::min(wanted, plan.cap), 1, content);
}

MaskedSequence MaskTokens(const TokenSequence &tokens, const MaskPlan &plan,
                          Rng &rng) {
  MaskedSequence out;
  out.ids = tokens.ids;
  std::vector<size_t> candidates;
  for (size_t t = 0; t < tokens.ids.size(); ++t) {
    int id = tokens.ids[t];
    if (id >= Vocab::kNumSpecial || id == Vocab::kUnk) candidates.push_back(t);
  }
  const auto count = static_cast<size_t>(
      MaskCount(static_cast<int64_t>(candidates.size()), plan));
  // Partial Fisher-Yates.
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + rng.Index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  for (size_t t : candidates) {
    out.positions.push_back(t);
    out.targets.push_back(out.ids[t]);
    out.ids[t] = Vocab::kMask;
  }
  return out;
}

TokenSequence TlmSequence(const SentencePair &pair, const Vocab &vocab,
                          size_t max_len) {
  TokenSequence src = Tokenize(pair.src.text, vocab, kUnboundedLength);
  TokenSequence tgt = Tokenize(pair.tgt.text, vocab, kUnboundedLength);
  std::vector<int> a(src.ids.begin() + 1, src.ids.end() - 1);
  std::vector<int> b(tgt.ids.begin() + 1, tgt.ids.end() - 1);
  if (a.empty() && b.empty()) {
    throw DataError("translation pair " + pair.src.id +
                    " has no tokens on either side");
  }
  if (max_len < 3) throw UsageError("TlmSequence: max_len must be at least 3");

  const size_t markers = b.empty() ? 2 : 3;
  while (a.size() + b.size() + markers > max_len) {
    if (b.size() > a.size()) {
      b.pop_back();
    } else {
      a.pop_back();
    }
  }
  TokenSequence out;
  out.surface_len = src.surface_len + tgt.surface_len;
  out.ids.push_back(Vocab::kCls);
  out.ids.insert(out.ids.end(), a.begin(), a.end());
  out.ids.push_back(Vocab::kSep);
  if (!b.empty()) {
    out.ids.insert(out.ids.end(), b.begin(), b.end());
    out.ids.push_back(Vocab::kSep);
  }
  return out;
}

LossAndGrad MlmLossAndGrad(const EncoderParams &params,
                           const std::vector<MaskedSequence> &batch) {
  size_t total = 0;
  for (const MaskedSequence &seq : batch) total += seq.positions.size();
  if (total == 0) throw DataError("MLM batch has no masked positions");

  const size_t v = params.config.vocab_size;
  const size_t d = params.config.hidden_dim;
  const size_t e = params.config.embed_dim;
  const double inv_total = 1.0 / static_cast<double>(total);

  LossAndGrad result{0.0, EncoderParams::Zeros(params.config)};
  EncoderParams &grads = result.grads;
  std::vector<double> z(e), logits(v), d_z(e);

  for (const MaskedSequence &seq : batch) {
    if (seq.positions.empty()) continue;
    ForwardCache cache = Forward(params, seq.ids);
    if (cache.ids.size() != seq.ids.size()) {
      throw DataError("masked sequences must not contain [PAD]");
    }
    const Matrix &last = cache.hidden.back();
    Matrix d_hidden(cache.ids.size(), d);

    for (size_t m = 0; m < seq.positions.size(); ++m) {
      const size_t t = seq.positions[m];
      const int target = seq.targets[m];
      std::copy(params.projection_bias.begin(), params.projection_bias.end(),
                z.begin());
      MatVecAdd(params.projection, last.row(t), z);

      std::copy(params.mlm_bias.begin(), params.mlm_bias.end(), logits.begin());
      const Matrix &head =
          params.config.tie_mlm_head ? params.token_embeddings : params.mlm_weights;
      Matrix &d_head =
          params.config.tie_mlm_head ? grads.token_embeddings : grads.mlm_weights;
      MatVecAdd(head, z, logits);
      const double peak = *std::max_element(logits.begin(), logits.end());
      double denom = 0.0;
      for (double &l : logits) {
        l = std::exp(l - peak);
        denom += l;
      }
      result.loss += (std::log(denom) + peak -
                      (std::log(logits[target]) + peak)) * inv_total;

      // logits now holds unnormalized probabilities; turn into dL/dlogits.
      for (size_t k = 0; k < v; ++k) logits[k] = logits[k] / denom * inv_total;
      logits[target] -= inv_total;

      OuterAdd(d_head, logits, z);
      for (size_t k = 0; k < v; ++k) grads.mlm_bias[k] += logits[k];
      std::fill(d_z.begin(), d_z.end(), 0.0);
      MatTVecAdd(head, logits, d_z);

      OuterAdd(grads.projection, d_z, last.row(t));
      for (size_t k = 0; k < e; ++k) grads.projection_bias[k] += d_z[k];
      MatTVecAdd(params.projection, d_z, d_hidden.row(t));
    }
    BackwardLayers(params, cache, std::move(d_hidden), grads);
  }
  if (!std::isfinite(result.loss)) throw NumericalError("MLM loss is not finite");
  return result;
}

void WriteParams(std::ostream &out, const EncoderParams &params) {
  const EncoderConfig &c = params.config;
  out.write(kParamsMagic, sizeof(kParamsMagic));
  WriteU64(out, static_cast<uint64_t>(c.vocab_size));
  WriteU64(out, static_cast<uint64_t>(c.hidden_dim));
  WriteU64(out, static_cast<uint64_t>(c.num_layers));
  WriteU64(out, static_cast<uint64_t>(c.max_seq_len));
  WriteU64(out, static_cast<uint64_t>(c.embed_dim));
  WriteU64(out, static_cast<uint64_t>(c.pooling));
  WriteU64(out, c.tie_mlm_head ? 1 : 0);
  for (auto tensor : params.Tensors()) WriteF64s(out, tensor);
}

EncoderParams ReadParams(std::istream &in) {
  BinaryReader reader(in);
  return ReadParams(reader);
}

EncoderParams ReadParams(BinaryReader &reader) {
  char magic[sizeof(kParamsMagic)];
  reader.ReadBytes(magic, sizeof(magic), "parameter magic");
  if (!std::equal(magic, magic + sizeof(magic), kParamsMagic)) {
    throw DataError("not an encoder parameter stream (bad magic at offset " +
                    std::to_string(reader.offset() - sizeof(magic)) + ")");
  }
  EncoderConfig c;
  c.vocab_size = static_cast<int64_t>(reader.ReadU64("vocab_size"));
  c.hidden_dim = static_cast<int64_t>(reader.ReadU64("hidden_dim"));
  c.num_layers = static_cast<int64_t>(reader.ReadU64("num_layers"));
  c.max_seq_len = static_cast<int64_t>(reader.ReadU64("max_seq_len"));
  c.embed_dim = static_cast<int64_t>(reader.ReadU64("embed_dim"));
  c.pooling = static_cast<Pooling>(reader.ReadU64("pooling"));
  const uint64_t tie = reader.ReadU64("tie_mlm_head");
  if (tie > 1) throw DataError("invalid tie_mlm_head flag in parameter header");
  c.tie_mlm_head = tie == 1;
  constexpr int64_t kLimit = int64_t{1} << 32;
  if (c.vocab_size > kLimit || c.hidden_dim > kLimit || c.num_layers > 4096 ||
      c.embed_dim > kLimit) {
    throw DataError("implausible encoder config in parameter header");
  }
  try {
    c.Validate();
  } catch (const Error &e) {
    throw DataError(std::string("parameter header: ") + e.what());
  }
  EncoderParams params = EncoderParams::Zeros(c);
  for (auto tensor : params.Tensors()) reader.ReadF64s(tensor, "parameter tensor");
  for (auto tensor : params.Tensors()) {
    for (double x : tensor) {
      if (!std::isfinite(x)) throw DataError("non-finite parameter in stream");
    }
  }
  return params;
}

}  // namespace bitext
