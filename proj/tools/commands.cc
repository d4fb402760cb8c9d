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

#include "commands.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "bitext/corpus.h"
#include "bitext/encoder.h"
#include "bitext/error.h"
#include "bitext/evaluation.h"
#include "bitext/index.h"
#include "bitext/mining.h"
#include "bitext/negatives.h"
#include "bitext/synthetic.h"
#include "bitext/trainer.h"
#include "bitext/utf8.h"
#include "bitext/vocab.h"
#include "manifest.h"

namespace bitext::cli {
namespace {

using nlohmann::ordered_json;

std::string DefaultOutDir() {
  const char *env = std::getenv("BITEXT_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

ordered_json ScalarJson(const std::string &text) {
  if (text == "true") return true;
  if (text == "false") return false;
  size_t used = 0;
  try {
    if (text.find_first_of(".eE") == std::string::npos) {
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    }
    const double d = std::stod(text, &used);
    if (used == text.size() && std::isfinite(d)) return d;
  } catch (const std::exception &) {
  }
  return text;
}

// Every option of the subcommand with its resolved value.
ordered_json ResolvedConfig(const CLI::App *app) {
  ordered_json config = ordered_json::object();
  for (const CLI::Option *opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::vector<std::string> values = opt->count() > 0 ? opt->results()
                                                       : std::vector<std::string>{};
    if (opt->count() == 0) {
      const std::string fallback = opt->get_default_str();
      if (!fallback.empty()) values.push_back(fallback);
    }
    if (opt->get_expected_max() == 0) {
      config[name] = opt->count() > 0;
    } else if (opt->get_expected_max() > 1 || values.size() > 1) {
      ordered_json list = ordered_json::array();
      for (const std::string &v : values) list.push_back(ScalarJson(v));
      config[name] = list;
    } else if (values.empty()) {
      config[name] = nullptr;
    } else if (opt->get_type_name() == "BOOLEAN") {
      config[name] = CLI::detail::to_flag_value(values.front()) > 0;
    } else {
      config[name] = ScalarJson(values.front());
    }
  }
  return config;
}

void Log(const std::string &message) { std::cerr << message << '\n'; }

struct Run {
  Run(const std::string &command, const CLI::App *app, const CommonOptions &common,
      uint64_t seed)
      : out_dir(common.out_dir), manifest(command, ResolvedConfig(app), seed) {}

  std::string Input(const std::string &path) {
    manifest.AddInput(path);
    return path;
  }
  std::string Output(const std::string &name) {
    std::string path = ResolveOutput(out_dir, name);
    manifest.AddOutput(path);
    return path;
  }
  void Finish() {
    manifest.WriteAll();
    for (const std::string &out : manifest.outputs()) Log("wrote " + out);
  }

  std::string out_dir;
  RunManifest manifest;
};

void AddCommon(CLI::App *sub, CommonOptions &common) {
  common.out_dir = DefaultOutDir();
  sub->add_option("--out-dir", common.out_dir,
                  "Directory receiving every output (env BITEXT_OUT_DIR sets the default)");
  sub->add_flag("--deterministic", common.deterministic,
                "Serialize all numerics; identical inputs give identical bytes");
}

std::vector<Sentence> ReadMono(const std::vector<std::string> &paths, const std::string &lang,
                               Run &run) {
  std::vector<Sentence> out;
  for (const std::string &path : paths) {
    std::vector<Sentence> part = ReadMonolingualFile(run.Input(path), lang);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::map<std::string, std::vector<Sentence>> ByLanguage(const std::vector<Sentence> &sentences) {
  std::map<std::string, std::vector<Sentence>> out;
  for (const Sentence &s : sentences) out[s.lang].push_back(s);
  return out;
}

Vocab ReadVocab(const std::string &path, Run &run) { return LoadVocabFile(run.Input(path)); }

Checkpoint ReadModel(const std::string &path, const Vocab &vocab, Run &run) {
  Checkpoint ckpt = LoadCheckpoint(run.Input(path));
  if (ckpt.params.config.vocab_size != static_cast<int64_t>(vocab.size())) {
    throw DataError(path + ": model vocab size " +
                    std::to_string(ckpt.params.config.vocab_size) + " differs from vocab file (" +
                    std::to_string(vocab.size()) + ")");
  }
  return ckpt;
}

void WritePool(const std::string &stem_path, const EmbeddingPool &pool) {
  AtomicWrite(stem_path + ".f32", [&](std::ostream &o) { WritePoolVectors(o, pool); }, true);
  AtomicWrite(stem_path + ".ids", [&](std::ostream &o) { WriteIds(o, pool.ids); });
}

EmbeddingPool EncodeSentences(const EncoderParams &params, const Vocab &vocab,
                              const std::vector<Sentence> &sentences, size_t max_len) {
  std::vector<TokenSequence> tokens;
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const Sentence &s : sentences) {
    if (!seen.insert(s.id).second) throw DataError("duplicate sentence id '" + s.id + "'");
    tokens.push_back(Tokenize(s.text, vocab, max_len, s.lang));
    ids.push_back(s.id);
  }
  return EmbeddingPool::FromMatrix(EncodeBatch(params, tokens), std::move(ids));
}

template <typename T>
std::string Fixed(T value) {
  std::ostringstream out;
  out << std::setprecision(10) << value;
  return out.str();
}

struct ModelShape {
  int64_t hidden_dim = 32;
  int64_t layers = 2;
  int64_t embed_dim = 32;
  int64_t max_seq_len = 64;
  std::string pooling = "mean";
  bool tie_mlm_head = true;
};

void AddShapeOptions(CLI::App *sub, ModelShape &shape) {
  sub->add_option("--hidden-dim", shape.hidden_dim, "Encoder width d")->check(CLI::PositiveNumber);
  sub->add_option("--layers", shape.layers, "Encoder depth L")->check(CLI::PositiveNumber);
  sub->add_option("--embed-dim", shape.embed_dim, "Sentence embedding width")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-seq-len", shape.max_seq_len, "Longest token sequence the model accepts")
      ->check(CLI::Range(3, 1 << 20));
  sub->add_option("--pooling", shape.pooling, "Sentence pooling: mean or cls")
      ->check(CLI::IsMember({"mean", "cls"}));
  sub->add_option("--tie-mlm-head", shape.tie_mlm_head,
                  "Reuse token embeddings as the MLM output layer (needs embed-dim == hidden-dim)");
}

EncoderConfig ShapeConfig(const ModelShape &shape, const Vocab &vocab, int64_t layers) {
  EncoderConfig c;
  c.vocab_size = static_cast<int64_t>(vocab.size());
  c.hidden_dim = shape.hidden_dim;
  c.num_layers = layers;
  c.max_seq_len = shape.max_seq_len;
  c.embed_dim = shape.embed_dim;
  c.pooling = shape.pooling == "cls" ? Pooling::kCls : Pooling::kMeanContent;
  c.tie_mlm_head = shape.tie_mlm_head;
  c.Validate();
  return c;
}

// build-vocab ---------------------------------------------------------------

Command BuildVocabCommand(CLI::App &app) {
  struct Options {
    std::vector<std::string> inputs;
    std::vector<std::string> pairs;
    std::string lang = "und";
    int64_t size = 8000;
    double alpha = kDefaultSmoothingExponent;
    double coverage = 1.0;
    std::string output = "vocab.txt";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("build-vocab", "Induce a shared subword vocabulary");
  sub->add_option("--input", o->inputs, "Monolingual text files (lines may carry 'lang<TAB>')");
  sub->add_option("--pairs", o->pairs, "Pair TSV files whose both sides join the corpus");
  sub->add_option("--lang", o->lang, "Language of untagged lines");
  sub->add_option("--size", o->size, "Target vocabulary size")->check(CLI::PositiveNumber);
  sub->add_option("--alpha", o->alpha, "Language smoothing exponent in (0, 1]");
  sub->add_option("--coverage", o->coverage, "Character coverage in (0, 1]");
  sub->add_option("--output", o->output, "Vocabulary file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("build-vocab", sub, *common, 0);
            std::vector<Sentence> all = ReadMono(o->inputs, o->lang, run);
            for (const std::string &p : o->pairs) {
              for (const SentencePair &pair : ReadPairsFile(run.Input(p))) {
                all.push_back(pair.src);
                all.push_back(pair.tgt);
              }
            }
            if (all.empty()) throw UsageError("build-vocab needs --input or --pairs text");
            Vocab vocab = BuildVocab(ByLanguage(all), {static_cast<size_t>(o->size), o->alpha,
                                                       o->coverage});
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) { SaveVocab(s, vocab); });
            Log("vocabulary of " + std::to_string(vocab.size()) + " pieces");
            run.Finish();
          }};
}

// pretrain ------------------------------------------------------------------

Command PretrainCommand(CLI::App &app) {
  struct Options {
    std::string vocab;
    std::vector<std::string> mono;
    std::vector<std::string> pairs;
    std::string lang = "und";
    ModelShape shape;
    std::vector<int64_t> stages;
    int64_t steps = 700;
    int64_t batch = 32;
    double lr = 1e-3;
    double wd = 0.0;
    uint64_t seed = 1;
    int64_t mlm_ratio = 1;
    int64_t tlm_ratio = 1;
    double mask_fraction = kDefaultMaskFraction;
    int64_t mask_cap = kDefaultMaskCap;
    int64_t max_len = 64;
    int64_t log_every = 50;
    std::string output = "pretrained.ckpt";
    std::string log = "pretrain.log";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("pretrain", "MLM+TLM pretraining with progressive stacking");
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--mono", o->mono, "Monolingual text files for MLM");
  sub->add_option("--pairs", o->pairs, "Pair TSV files for TLM");
  sub->add_option("--lang", o->lang, "Language of untagged lines");
  AddShapeOptions(sub, o->shape);
  sub->add_option("--stages", o->stages,
                  "Layer count per stage, each dividing the next (default L/4,L/2,L when possible)")
      ->delimiter(',');
  sub->add_option("--steps", o->steps, "Total steps, split 1:2:4.5 over the last three stages");
  sub->add_option("--batch-size", o->batch, "Sequences per step")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o->lr, "Peak learning rate");
  sub->add_option("--weight-decay", o->wd, "Decoupled weight decay");
  sub->add_option("--seed", o->seed, "Random seed");
  sub->add_option("--mlm-ratio", o->mlm_ratio, "MLM steps per cycle");
  sub->add_option("--tlm-ratio", o->tlm_ratio, "TLM steps per cycle");
  sub->add_option("--mask-fraction", o->mask_fraction, "Fraction of content tokens masked");
  sub->add_option("--mask-cap", o->mask_cap, "Most tokens masked per sequence");
  sub->add_option("--max-len", o->max_len, "Token budget per sequence");
  sub->add_option("--log-every", o->log_every, "Echo every Nth step to stderr (0 = never)");
  sub->add_option("--output", o->output, "Checkpoint file");
  sub->add_option("--log", o->log, "Training log file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("pretrain", sub, *common, o->seed);
            const Vocab vocab = ReadVocab(o->vocab, run);
            std::vector<Sentence> mono = ReadMono(o->mono, o->lang, run);
            std::vector<SentencePair> pairs;
            for (const std::string &p : o->pairs) {
              std::vector<SentencePair> part = ReadPairsFile(run.Input(p));
              pairs.insert(pairs.end(), part.begin(), part.end());
            }
            PretrainConfig pc;
            pc.stage_layers = o->stages.empty() ? DefaultStageLayers(o->shape.layers) : o->stages;
            if (pc.stage_layers.back() != o->shape.layers) {
              throw UsageError("the last stage must have --layers layers");
            }
            pc.stage_steps = StageSteps(o->steps, pc.stage_layers.size());
            pc.batch_size = o->batch;
            pc.learning_rate = o->lr;
            pc.weight_decay = o->wd;
            pc.seed = o->seed;
            pc.mlm_per_cycle = o->mlm_ratio;
            pc.tlm_per_cycle = o->tlm_ratio;
            pc.mask = {o->mask_fraction, o->mask_cap};
            pc.max_len = o->max_len;
            pc.Validate();

            EncoderParams params = EncoderParams::Random(
                ShapeConfig(o->shape, vocab, pc.stage_layers.front()), o->seed);
            const std::string out = run.Output(o->output);
            const std::string log_path = run.Output(o->log);
            std::ostringstream log;
            TrainHooks hooks;
            hooks.on_step = [&](const TrainLogRecord &r) {
              WriteTrainLogRecord(log, r);
              if (o->log_every > 0 && r.step % o->log_every == 0) {
                std::ostringstream line;
                WriteTrainLogRecord(line, r);
                std::cerr << line.str();
              }
            };
            // The newest stage checkpoint stays on disk if a later stage diverges.
            hooks.on_checkpoint = [&](const EncoderParams &p, const OptimizerState &) {
              AtomicWrite(out, [&](std::ostream &s) { WriteCheckpoint(s, p, nullptr); }, true);
            };
            try {
              Pretrain(params, mono, pairs, vocab, pc, hooks);
            } catch (...) {
              AtomicWrite(log_path, [&](std::ostream &s) { s << log.str(); });
              throw;
            }
            AtomicWrite(log_path, [&](std::ostream &s) { s << log.str(); });
            run.Finish();
          }};
}

// train ---------------------------------------------------------------------

Command TrainCommand(CLI::App &app) {
  struct Options {
    std::string vocab;
    std::vector<std::string> pairs;
    std::string init;
    std::string resume;
    ModelShape shape;
    TrainConfig config;
    std::string scale_mode = "similarity";
    std::string negatives = "broadcast";
    int64_t hard_negatives = 0;
    std::string weak_model;
    std::string negative_pool;
    int64_t checkpoint_every = 0;
    int64_t stop_at_step = -1;
    int64_t log_every = 100;
    std::string output = "model.ckpt";
    std::string log = "train.log";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  TrainConfig &c = o->config;
  CLI::App *sub = app.add_subcommand("train", "Fine-tune the dual encoder on translation pairs");
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--pairs", o->pairs, "Pair TSV files")->required();
  sub->add_option("--init", o->init, "Start from this checkpoint's parameters (e.g. pretrained)");
  sub->add_option("--resume", o->resume, "Continue from a checkpoint with optimizer state");
  AddShapeOptions(sub, o->shape);
  sub->add_option("--batch-size", c.batch_size, "Pairs per step");
  sub->add_option("--steps", c.steps, "Total optimizer steps (linear decay horizon)");
  sub->add_option("--lr", c.learning_rate, "Peak learning rate");
  sub->add_option("--weight-decay", c.weight_decay, "Decoupled weight decay");
  sub->add_option("--margin", c.margin, "Additive margin m in [0, 1)");
  sub->add_option("--scale", c.scale, "Logit scale s");
  sub->add_option("--scale-mode", o->scale_mode,
                  "similarity: s*(cos-m); embedding: s^2*cos-m")
      ->check(CLI::IsMember({"similarity", "embedding"}));
  sub->add_option("--shards", c.shards, "Simulated accelerator shards K (divides batch)");
  sub->add_option("--negatives", o->negatives, "broadcast (cross-shard) or local (ablation)")
      ->check(CLI::IsMember({"broadcast", "local"}));
  sub->add_option("--hard-negatives", o->hard_negatives, "Mined hard negatives per source (0 = off)");
  sub->add_option("--weak-model", o->weak_model, "Checkpoint that mines hard negatives");
  sub->add_option("--negative-pool", o->negative_pool,
                  "Target-language text to mine negatives from (default: training targets)");
  sub->add_option("--seed", c.seed, "Random seed (initialization and batches)");
  sub->add_option("--max-len", c.max_len, "Token budget per sentence");
  sub->add_option("--checkpoint-every", o->checkpoint_every,
                  "Rewrite the checkpoint every N steps (0 = only at the end)");
  sub->add_option("--stop-at-step", o->stop_at_step,
                  "Stop early at this step, keeping optimizer state for --resume (-1 = off)");
  sub->add_option("--log-every", o->log_every, "Echo every Nth step to stderr (0 = never)");
  sub->add_option("--output", o->output, "Checkpoint file");
  sub->add_option("--log", o->log, "Training log file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            TrainConfig config = o->config;
            config.scale_mode =
                o->scale_mode == "embedding" ? ScaleMode::kEmbedding : ScaleMode::kSimilarity;
            config.negatives =
                o->negatives == "local" ? NegativeScope::kLocal : NegativeScope::kBroadcast;
            config.Validate();
            if (!o->init.empty() && !o->resume.empty()) {
              throw UsageError("--init and --resume are exclusive");
            }
            Run run("train", sub, *common, config.seed);
            const Vocab vocab = ReadVocab(o->vocab, run);
            std::vector<SentencePair> pairs;
            for (const std::string &p : o->pairs) {
              std::vector<SentencePair> part = ReadPairsFile(run.Input(p));
              pairs.insert(pairs.end(), part.begin(), part.end());
            }
            for (size_t i = 0; i < pairs.size(); ++i) {
              pairs[i].src.id = pairs[i].tgt.id = std::to_string(i + 1);
            }

            EncoderParams params;
            OptimizerState state;
            if (!o->resume.empty()) {
              Checkpoint ckpt = ReadModel(o->resume, vocab, run);
              if (!ckpt.state) throw DataError(o->resume + " has no optimizer state to resume");
              params = std::move(ckpt.params);
              state = std::move(*ckpt.state);
            } else {
              params = !o->init.empty()
                           ? ReadModel(o->init, vocab, run).params
                           : EncoderParams::Random(
                                 ShapeConfig(o->shape, vocab, o->shape.layers), config.seed);
              state = OptimizerState::Zeros(params.config);
            }

            HardNegativeSet negatives;
            if (o->hard_negatives > 0) {
              if (o->weak_model.empty()) throw UsageError("--hard-negatives needs --weak-model");
              const EncoderParams weak = ReadModel(o->weak_model, vocab, run).params;
              std::vector<Sentence> pool;
              if (!o->negative_pool.empty()) {
                pool = ReadMonolingualFile(run.Input(o->negative_pool), "und");
              } else {
                for (const SentencePair &p : pairs) pool.push_back(p.tgt);
              }
              negatives = MineHardNegatives(weak, vocab, pairs, pool,
                                            static_cast<size_t>(o->hard_negatives),
                                            static_cast<size_t>(config.max_len));
            }

            const std::string out = run.Output(o->output);
            const std::string log_path = run.Output(o->log);
            std::ostringstream log;
            if (!o->resume.empty()) {
              std::ifstream previous(ResolveOutput(run.out_dir, o->log));
              if (previous) log << previous.rdbuf();
            }
            TrainHooks hooks;
            hooks.checkpoint_every = o->checkpoint_every;
            hooks.stop_at_step = o->stop_at_step;
            hooks.on_step = [&](const TrainLogRecord &r) {
              WriteTrainLogRecord(log, r);
              if (o->log_every > 0 && r.step % o->log_every == 0) {
                std::ostringstream line;
                WriteTrainLogRecord(line, r);
                std::cerr << line.str();
              }
            };
            hooks.on_checkpoint = [&](const EncoderParams &p, const OptimizerState &s) {
              AtomicWrite(out, [&](std::ostream &f) { WriteCheckpoint(f, p, &s); }, true);
            };
            try {
              FinetuneDualEncoder(params, state, pairs, vocab, config, hooks,
                                  o->hard_negatives > 0 ? &negatives : nullptr);
            } catch (...) {
              AtomicWrite(log_path, [&](std::ostream &s) { s << log.str(); });
              throw;
            }
            AtomicWrite(out, [&](std::ostream &f) { WriteCheckpoint(f, params, &state); }, true);
            AtomicWrite(log_path, [&](std::ostream &s) { s << log.str(); });
            run.Finish();
          }};
}

// encode --------------------------------------------------------------------

Command EncodeCommand(CLI::App &app) {
  struct Options {
    std::string model, vocab, input, lang = "und", output = "pool";
    int64_t max_len = 64;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("encode", "Embed sentences into a vector pool");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--input", o->input, "Monolingual text file; ids are line numbers")->required();
  sub->add_option("--lang", o->lang, "Language of untagged lines");
  sub->add_option("--max-len", o->max_len, "Token budget per sentence");
  sub->add_option("--output", o->output, "Pool stem; writes <stem>.f32 and <stem>.ids");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("encode", sub, *common, 0);
            const Vocab vocab = ReadVocab(o->vocab, run);
            const EncoderParams params = ReadModel(o->model, vocab, run).params;
            const std::vector<Sentence> sentences =
                ReadMonolingualFile(run.Input(o->input), o->lang);
            const EmbeddingPool pool = EncodeSentences(params, vocab, sentences,
                                                       static_cast<size_t>(o->max_len));
            const std::string stem = ResolveOutput(run.out_dir, o->output);
            run.Output(o->output + ".f32");
            run.Output(o->output + ".ids");
            WritePool(stem, pool);
            Log("encoded " + std::to_string(pool.size()) + " sentences");
            run.Finish();
          }};
}

// index ---------------------------------------------------------------------

Command IndexCommand(CLI::App &app) {
  struct Options {
    std::string pool, mode = "exact", output = "index";
    IndexConfig config;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("index", "Build a search index over a vector pool");
  sub->add_option("--pool", o->pool, "Pool stem (<stem>.f32, <stem>.ids)")->required();
  sub->add_option("--mode", o->mode, "exact or partitioned")
      ->check(CLI::IsMember({"exact", "partitioned"}));
  sub->add_option("--clusters", o->config.clusters, "Partitions C");
  sub->add_option("--probes", o->config.probes, "Default partitions probed P");
  sub->add_option("--kmeans-iters", o->config.kmeans_iters, "Spherical k-means iterations");
  sub->add_option("--seed", o->config.seed, "k-means seeding");
  sub->add_option("--output", o->output, "Index directory");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("index", sub, *common, o->config.seed);
            run.Input(o->pool + ".f32");
            run.Input(o->pool + ".ids");
            EmbeddingPool pool = LoadPool(o->pool);
            VectorIndex index = o->mode == "exact"
                                    ? VectorIndex::BuildExact(std::move(pool))
                                    : VectorIndex::BuildPartitioned(std::move(pool), o->config);
            const std::string out = run.Output(o->output);
            AtomicWriteDir(out, [&](const std::string &dir) { index.Save(dir); });
            run.Finish();
          }};
}

// search --------------------------------------------------------------------

Command SearchCommand(CLI::App &app) {
  struct Options {
    std::string index, queries, output = "candidates.tsv";
    size_t k = 1;
    size_t probes = 16;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("search", "Top-k neighbors for every query vector");
  sub->add_option("--index", o->index, "Index directory")->required();
  sub->add_option("--queries", o->queries, "Query pool stem")->required();
  sub->add_option("--k", o->k, "Neighbors per query")->check(CLI::PositiveNumber);
  sub->add_option("--probes", o->probes, "Partitions probed (partitioned indexes)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--output", o->output, "Candidate TSV: query, hit, score");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("search", sub, *common, 0);
            run.Input(o->index);
            run.Input(o->queries + ".f32");
            run.Input(o->queries + ".ids");
            const VectorIndex index = VectorIndex::Load(o->index, o->probes);
            const EmbeddingPool queries = LoadPool(o->queries);
            const std::vector<Candidate> hits = RetrieveCandidates(queries, index, o->k);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) { WriteCandidates(s, hits); });
            run.Finish();
          }};
}

// mine ----------------------------------------------------------------------

Command MineCommand(CLI::App &app) {
  struct Options {
    std::string model, vocab, source, target;
    std::string source_lang = "src", target_lang = "tgt";
    MiningConfig config;
    std::string query_side = "auto";
    std::string index_mode = "exact";
    IndexConfig index;
    std::string output = "mined.tsv", selected = "selected.tsv", report = "mining_report.txt";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  MiningConfig &c = o->config;
  CLI::App *sub = app.add_subcommand("mine", "Extract translation pairs from two text collections");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--source", o->source, "Source-language text file")->required();
  sub->add_option("--target", o->target, "Target-language text file")->required();
  sub->add_option("--source-lang", o->source_lang, "Language of untagged source lines");
  sub->add_option("--target-lang", o->target_lang, "Language of untagged target lines");
  sub->add_option("--threshold", c.similarity_threshold, "Minimum cosine similarity");
  sub->add_option("--k", c.neighbors_k, "Neighbors examined per query");
  sub->add_option("--fraction", c.selection_fraction, "Share of deduplicated pairs selected");
  sub->add_option("--query-side", o->query_side, "source, target or auto (smaller side queries)")
      ->check(CLI::IsMember({"source", "target", "auto"}));
  sub->add_option("--batch-size", c.batch_size, "Queries encoded per round");
  sub->add_option("--max-len", c.max_len, "Token budget per sentence");
  sub->add_option("--index-mode", o->index_mode, "exact or partitioned")
      ->check(CLI::IsMember({"exact", "partitioned"}));
  sub->add_option("--clusters", o->index.clusters, "Partitions C (partitioned mode)");
  sub->add_option("--probes", o->index.probes, "Partitions probed P (partitioned mode)");
  sub->add_option("--seed", o->index.seed, "k-means seeding (partitioned mode)");
  sub->add_option("--output", o->output, "Deduplicated pairs above the threshold");
  sub->add_option("--selected", o->selected, "Top-fraction pairs");
  sub->add_option("--report", o->report, "Mining report");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            MiningConfig config = o->config;
            config.query_side = o->query_side == "source"   ? QuerySide::kSource
                                : o->query_side == "target" ? QuerySide::kTarget
                                                            : QuerySide::kAuto;
            config.Validate();
            Run run("mine", sub, *common, o->index.seed);
            const Vocab vocab = ReadVocab(o->vocab, run);
            const EncoderParams params = ReadModel(o->model, vocab, run).params;
            const std::vector<Sentence> sources =
                ReadMonolingualFile(run.Input(o->source), o->source_lang);
            const std::vector<Sentence> targets =
                ReadMonolingualFile(run.Input(o->target), o->target_lang);
            const bool flip = config.query_side == QuerySide::kTarget ||
                              (config.query_side == QuerySide::kAuto &&
                               targets.size() < sources.size());
            const std::vector<SentencePair> emitted = MineCorpora(
                sources, targets, params, vocab, config,
                o->index_mode == "partitioned" ? &o->index : nullptr);
            const std::vector<SentencePair> unique = Dedup(emitted);
            const std::vector<SentencePair> top = SelectTop(unique, config.selection_fraction);
            const MiningReport report = BuildMiningReport(
                static_cast<int64_t>(flip ? targets.size() : sources.size()), emitted, config);

            const std::string out = run.Output(o->output);
            const std::string selected = run.Output(o->selected);
            const std::string report_path = run.Output(o->report);
            AtomicWrite(out, [&](std::ostream &s) { WritePairs(s, unique); });
            AtomicWrite(selected, [&](std::ostream &s) { WritePairs(s, top); });
            AtomicWrite(report_path, [&](std::ostream &s) { WriteMiningReport(s, report); });
            Log("mined " + std::to_string(unique.size()) + " pairs, selected " +
                std::to_string(top.size()));
            run.Finish();
          }};
}

// eval-p1 -------------------------------------------------------------------

Command EvalP1Command(CLI::App &app) {
  struct Options {
    std::string sources, targets, gold, index, output = "p1.txt";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("eval-p1", "Precision@1 of source vectors against targets");
  sub->add_option("--sources", o->sources, "Source pool stem")->required();
  sub->add_option("--targets", o->targets, "Target pool stem (searched exactly)");
  sub->add_option("--index", o->index, "Prebuilt target index directory instead of --targets");
  sub->add_option("--gold", o->gold, "Gold TSV: source id, target id")->required();
  sub->add_option("--output", o->output, "Result file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            if (o->targets.empty() == o->index.empty()) {
              throw UsageError("give exactly one of --targets and --index");
            }
            Run run("eval-p1", sub, *common, 0);
            run.Input(o->sources + ".f32");
            run.Input(o->sources + ".ids");
            const EmbeddingPool sources = LoadPool(o->sources);
            VectorIndex index = [&] {
              if (!o->index.empty()) return VectorIndex::Load(run.Input(o->index));
              run.Input(o->targets + ".f32");
              run.Input(o->targets + ".ids");
              return VectorIndex::BuildExact(LoadPool(o->targets));
            }();
            const GoldAlignment gold = ReadGoldFile(run.Input(o->gold));
            const double p1 = PrecisionAt1(sources, index, gold);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) {
              s << "p_at_1=" << Fixed(p1) << "\nqueries=" << gold.pairs.size() << '\n';
            });
            Log("P@1 " + Fixed(p1));
            run.Finish();
          }};
}

// eval-tatoeba --------------------------------------------------------------

Command EvalTatoebaCommand(CLI::App &app) {
  struct Options {
    std::vector<std::string> sets;
    std::string groups, output = "tatoeba.txt";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("eval-tatoeba", "Per-language accuracy and group averages");
  sub->add_option("--set", o->sets, "lang:source_stem:target_stem:gold_tsv (repeatable)")
      ->required();
  sub->add_option("--groups", o->groups, "TSV: group name, comma-separated languages")
      ->required();
  sub->add_option("--output", o->output, "Result file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("eval-tatoeba", sub, *common, 0);
            std::map<std::string, LanguageSet> sets;
            for (const std::string &spec : o->sets) {
              std::vector<std::string> f = SplitFields(spec, ':');
              if (f.size() != 4) throw UsageError("bad --set '" + spec + "'");
              for (const std::string &stem : {f[1], f[2]}) {
                run.Input(stem + ".f32");
                run.Input(stem + ".ids");
              }
              sets[f[0]] = {LoadPool(f[1]), LoadPool(f[2]), ReadGoldFile(run.Input(f[3]))};
            }
            std::map<std::string, std::vector<std::string>> groups;
            std::ifstream in(run.Input(o->groups));
            std::string line;
            while (std::getline(in, line)) {
              if (line.empty()) continue;
              std::vector<std::string> f = SplitFields(line, '\t');
              if (f.size() != 2) throw DataError("groups line '" + line + "' needs two fields");
              groups[f[0]] = SplitFields(f[1], ',');
            }
            const TatoebaReport report = TatoebaAccuracy(sets, groups);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) {
              for (const auto &[lang, acc] : report.accuracy) {
                s << "accuracy[" << lang << "]=" << Fixed(acc) << '\n';
              }
              for (const auto &[group, avg] : report.group_average) {
                s << "group_average[" << group << "]=" << Fixed(avg) << '\n';
              }
              for (const auto &[group, langs] : report.missing) {
                s << "missing[" << group << "]=";
                for (size_t i = 0; i < langs.size(); ++i) s << (i ? "," : "") << langs[i];
                s << '\n';
              }
            });
            run.Finish();
          }};
}

// eval-bucc -----------------------------------------------------------------

Command EvalBuccCommand(CLI::App &app) {
  struct Options {
    std::string candidates, gold, output = "bucc.txt";
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("eval-bucc", "Best F1 over a score-threshold sweep");
  sub->add_option("--candidates", o->candidates, "Candidate TSV: source, target, score")
      ->required();
  sub->add_option("--gold", o->gold, "Gold TSV: source id, target id")->required();
  sub->add_option("--output", o->output, "Result file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("eval-bucc", sub, *common, 0);
            std::ifstream in(run.Input(o->candidates));
            const std::vector<Candidate> candidates = ReadCandidates(in);
            const Prf best = BuccBestF1(candidates, ReadGoldFile(run.Input(o->gold)));
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) {
              s << std::setprecision(17) << "precision=" << best.precision
                << "\nrecall=" << best.recall << "\nf1=" << best.f1
                << "\nthreshold=" << best.threshold << '\n';
            });
            Log("best F1 " + Fixed(best.f1) + " at threshold " + Fixed(best.threshold));
            run.Finish();
          }};
}

// eval-sts ------------------------------------------------------------------

Command EvalStsCommand(CLI::App &app) {
  struct Options {
    std::string model, vocab, input, output = "sts.txt";
    int64_t max_len = 64;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("eval-sts", "Pearson r of arccos similarity vs gold scores");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--input", o->input, "TSV: sentence, sentence, gold score")->required();
  sub->add_option("--max-len", o->max_len, "Token budget per sentence");
  AddCommon(sub, *common);
  sub->add_option("--output", o->output, "Result file");
  return {sub, common, [=] {
            Run run("eval-sts", sub, *common, 0);
            const Vocab vocab = ReadVocab(o->vocab, run);
            const EncoderParams params = ReadModel(o->model, vocab, run).params;
            std::ifstream in(run.Input(o->input));
            std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
            std::vector<double> gold;
            std::string line;
            size_t line_no = 0;
            const auto max_len = static_cast<size_t>(o->max_len);
            while (std::getline(in, line)) {
              ++line_no;
              if (line.empty()) continue;
              std::vector<std::string> f = SplitFields(line, '\t');
              size_t used = 0;
              double score = NAN;
              if (f.size() == 3) {
                try {
                  score = std::stod(f[2], &used);
                } catch (const std::exception &) {
                  used = 0;
                }
              }
              if (f.size() != 3 || used != f[2].size() || !std::isfinite(score)) {
                throw DataError("sts line " + std::to_string(line_no) +
                                ": expected sentence<TAB>sentence<TAB>score");
              }
              pairs.emplace_back(Encode(params, Tokenize(f[0], vocab, max_len)),
                                 Encode(params, Tokenize(f[1], vocab, max_len)));
              gold.push_back(score);
            }
            const double r = StsPearson(pairs, gold);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) {
              s << std::setprecision(17) << "pearson=" << r << "\npairs=" << gold.size() << '\n';
            });
            Log("Pearson r " + Fixed(r));
            run.Finish();
          }};
}

// stats ---------------------------------------------------------------------

Command StatsCommand(CLI::App &app) {
  struct Options {
    std::string vocab, lang = "und", output = "stats.tsv";
    std::vector<std::string> inputs;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("stats", "Token statistics per language");
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required();
  sub->add_option("--input", o->inputs, "Monolingual text files")->required();
  sub->add_option("--lang", o->lang, "Language of untagged lines");
  sub->add_option("--output", o->output, "Stats TSV, one record per language plus 'all'");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("stats", sub, *common, 0);
            const Vocab vocab = ReadVocab(o->vocab, run);
            const auto by_lang = ByLanguage(ReadMono(o->inputs, o->lang, run));
            CorpusStats total = ComputeCorpusStats({}, vocab);
            std::vector<std::pair<std::string, CorpusStats>> rows;
            for (const auto &[lang, sentences] : by_lang) {
              rows.emplace_back(lang, ComputeCorpusStats(sentences, vocab));
              total = CombineStats(total, rows.back().second);
            }
            rows.emplace_back("all", total);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) {
              for (const auto &[lang, stats] : rows) WriteStatsReport(s, lang, stats);
            });
            run.Finish();
          }};
}

// report --------------------------------------------------------------------

Command ReportCommand(CLI::App &app) {
  struct Options {
    std::string pairs, output = "report.txt";
    int64_t sources_processed = -1;
    double fraction = kDefaultSelectionFraction;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CLI::App *sub = app.add_subcommand("report", "Mining report for a scored pair file");
  sub->add_option("--pairs", o->pairs, "Scored pair TSV")->required();
  sub->add_option("--sources-processed", o->sources_processed,
                  "Queries examined (-1 = number of distinct sources)");
  sub->add_option("--fraction", o->fraction, "Selection fraction for the selected count");
  sub->add_option("--output", o->output, "Report file");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("report", sub, *common, 0);
            const std::vector<SentencePair> pairs = ReadPairsFile(run.Input(o->pairs));
            for (const SentencePair &p : pairs) {
              if (!p.score) throw DataError("report needs scored pairs");
            }
            int64_t processed = o->sources_processed;
            if (processed < 0) {
              std::set<std::string> distinct;
              for (const SentencePair &p : pairs) distinct.insert(p.src.text);
              processed = static_cast<int64_t>(distinct.size());
            }
            MiningConfig config;
            config.selection_fraction = o->fraction;
            config.Validate();
            const MiningReport report = BuildMiningReport(processed, pairs, config);
            const std::string out = run.Output(o->output);
            AtomicWrite(out, [&](std::ostream &s) { WriteMiningReport(s, report); });
            run.Finish();
          }};
}

// synth ---------------------------------------------------------------------

Command SynthCommand(CLI::App &app) {
  struct Options {
    CipherCorpusConfig config;
    double mispair = 0.0;
  };
  auto o = std::make_shared<Options>();
  auto common = std::make_shared<CommonOptions>();
  CipherCorpusConfig &c = o->config;
  CLI::App *sub =
      app.add_subcommand("synth", "Write the synthetic two-language cipher corpus");
  sub->add_option("--lexicon", c.lexicon_size, "Distinct source words");
  sub->add_option("--min-words", c.min_words, "Shortest sentence");
  sub->add_option("--max-words", c.max_words, "Longest sentence");
  sub->add_option("--train-pairs", c.train_pairs, "Training pairs");
  sub->add_option("--test-pairs", c.test_pairs, "Held-out pairs");
  sub->add_option("--mono", c.mono_sentences, "Monolingual sentences per language");
  sub->add_option("--zipf", c.zipf_exponent, "Word frequency exponent");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--mispair", o->mispair, "Fraction of training pairs with shuffled targets");
  AddCommon(sub, *common);
  return {sub, common, [=] {
            Run run("synth", sub, *common, o->config.seed);
            CipherCorpus corpus = MakeCipherCorpus(o->config);
            if (o->mispair > 0) corpus.train = Mispair(corpus.train, o->mispair, o->config.seed);
            auto write_pairs = [&](const std::string &name, const std::vector<SentencePair> &p) {
              AtomicWrite(run.Output(name), [&](std::ostream &s) { WritePairs(s, p); });
            };
            auto write_mono = [&](const std::string &name, const std::vector<Sentence> &m) {
              AtomicWrite(run.Output(name), [&](std::ostream &s) {
                for (const Sentence &x : m) s << x.lang << '\t' << x.text << '\n';
              });
            };
            write_pairs("train.tsv", corpus.train);
            write_pairs("test.tsv", corpus.test);
            write_mono("mono_src.txt", corpus.mono_src);
            write_mono("mono_tgt.txt", corpus.mono_tgt);
            std::vector<Sentence> test_src, test_tgt;
            for (const SentencePair &p : corpus.test) {
              test_src.push_back(p.src);
              test_tgt.push_back(p.tgt);
            }
            write_mono("test_src.txt", test_src);
            write_mono("test_tgt.txt", test_tgt);
            AtomicWrite(run.Output("test_gold.tsv"), [&](std::ostream &s) {
              for (size_t i = 1; i <= corpus.test.size(); ++i) s << i << '\t' << i << '\n';
            });
            run.Finish();
          }};
}

}  // namespace

std::vector<Command> RegisterCommands(CLI::App &app) {
  return {BuildVocabCommand(app), PretrainCommand(app),   TrainCommand(app),
          EncodeCommand(app),     IndexCommand(app),      SearchCommand(app),
          MineCommand(app),       EvalP1Command(app),     EvalTatoebaCommand(app),
          EvalBuccCommand(app),   EvalStsCommand(app),    StatsCommand(app),
          ReportCommand(app),     SynthCommand(app)};
}

}  // namespace bitext::cli
