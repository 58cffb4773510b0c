// Copyright 2026 The GAIN-NER Authors.
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

#ifndef GAIN_MODEL_H_
#define GAIN_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gain/corpus.h"
#include "gain/num/autodiff.h"
#include "gain/num/ops.h"
#include "gain/rng.h"
#include "gain/tags.h"

namespace gain {

// How encoder output e and gazetteer-network output g are fused. kNone
// drops the gazetteer network entirely (the encoder-only baseline).
enum class IntegrationMode { kConcat, kWeightedSum, kNone };
enum class ClassifierKind { kSoftmax, kCrf, kSpan };
enum class Stage { kInitial, kPretrained, kAdapted, kTrained };

std::string_view integration_name(IntegrationMode mode);
IntegrationMode parse_integration(std::string_view name);
std::string_view classifier_name(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);
std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

// Span heads predict one of these per token: 0 = none, 1 + type index.
inline constexpr int kSpanClasses = 1 + kNumTypes;

struct ModelConfig {
  size_t embed_dim = 32;
  size_t hidden = 64;      // D; split evenly between the two directions
  size_t gaz_hidden = 32;  // H, width of the gazetteer network's dense layer
  IntegrationMode integration = IntegrationMode::kConcat;
  ClassifierKind classifier = ClassifierKind::kSoftmax;
  size_t span_max_width = 10;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Token ids; id 0 is the unknown-word entry.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();
  // `words[0]` must be the unknown token; the rest must be distinct.
  explicit Vocab(std::vector<std::string> words);
  // Every token seen at least `min_count` times, in first-seen order.
  static Vocab build(const Dataset& data, size_t min_count);

  int id(const std::string& token) const;
  std::vector<int> encode(std::span<const std::string> tokens) const;
  size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  bool operator==(const Vocab& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Per-call switches for stochastic layers.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
};

// Decoded output of one sentence.
struct Prediction {
  num::Tensor logits;  // [n, 13], or [n, 14] (start | end) for span heads
  std::vector<int> tags;
};

// Encoder, gazetteer network, projection heads, fusion parameters and one
// backend classifier, all stored in a single ParamSet. Parameter names are
// prefixed by component ("encoder.", "gaznet.", "head_e.", ...).
class Model {
 public:
  Model(ModelConfig config, Vocab vocab, uint64_t seed);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  num::ParamSet& params() { return params_; }
  const num::ParamSet& params() const { return params_; }
  uint64_t seed() const { return seed_; }
  Stage stage() const { return stage_; }
  void set_stage(Stage stage) { stage_ = stage; }

  bool has_gaznet() const { return config_.integration != IntegrationMode::kNone; }
  // Width of the classifier input.
  size_t fused_dim() const;
  // Columns of the classifier logits.
  size_t logit_cols() const;

  // e: [n, D].
  num::Var encode(std::span<const std::string> tokens, const ForwardContext& ctx);
  // g: [n, D].
  num::Var gaznet(const FeatureMatrix& features, const ForwardContext& ctx);
  // Tag-logit projections e^t and g^t: [n, 13].
  num::Var project_e(const num::Var& e);
  num::Var project_g(const num::Var& g);
  num::Var integrate(const num::Var& e, const num::Var& g);
  // Classifier scores for the fused representation.
  num::Var logits(const num::Var& fused, const ForwardContext& ctx);
  // Cross-entropy (softmax), negative log-likelihood (CRF) or summed
  // start/end cross-entropy (span) against gold tags.
  num::Var classifier_loss(const num::Var& logits, std::span<const int> gold);
  // BIO-valid tags from classifier scores.
  std::vector<int> decode(const num::Tensor& logits) const;

  // Inference for one sentence. `features` is ignored without a gazetteer
  // network and required otherwise.
  Prediction predict(std::span<const std::string> tokens, const FeatureMatrix* features);

  // sigmoid(lambda_raw) per dimension; empty unless weighted_sum.
  std::vector<double> lambda_weights() const;
  double mean_lambda() const;

  // Copies every "encoder." parameter from `other`, which must share the
  // vocabulary and encoder dimensions.
  void adopt_encoder(const Model& other);

 private:
  struct Lstm {
    num::Parameter* wx = nullptr;
    num::Parameter* wh = nullptr;
    num::Parameter* b = nullptr;
  };
  struct Linear {
    num::Parameter* w = nullptr;
    num::Parameter* b = nullptr;
  };

  Linear add_linear(const std::string& prefix, num::ParamGroup group, size_t in,
                    size_t out);
  Lstm add_lstm(const std::string& prefix, num::ParamGroup group, size_t in,
                size_t hidden);
  num::Var apply(const Linear& l, const num::Var& x);
  num::Var run_bilstm(const Lstm& fwd, const Lstm& bwd, const num::Var& x);

  ModelConfig config_;
  Vocab vocab_;
  uint64_t seed_;
  Stage stage_ = Stage::kInitial;
  num::ParamSet params_;

  num::Parameter* embedding_ = nullptr;
  Lstm enc_fwd_, enc_bwd_;
  Linear gaz_dense_;
  Lstm gaz_fwd_, gaz_bwd_;
  Linear head_e_, head_g_;
  num::Parameter* lambda_ = nullptr;
  Linear classifier_;       // softmax and CRF emissions
  num::Parameter* transitions_ = nullptr;
  num::Parameter* crf_start_ = nullptr;
  num::Parameter* crf_end_ = nullptr;
  Linear span_start_, span_end_;
};

// Per-token start and end class targets for span heads.
std::pair<std::vector<int>, std::vector<int>> span_targets(std::span<const int> tags);

// Pairs each predicted start of type t with the nearest later unconsumed end
// of type t at most `max_width` tokens away. Starts inside an emitted span
// are skipped; unpaired predictions are dropped.
std::vector<int> span_decode(std::span<const int> start_class,
                             std::span<const int> end_class, size_t max_width);

// Argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const num::Tensor& scores, size_t begin = 0,
                             size_t end = 0);

}  // namespace gain

#endif  // GAIN_MODEL_H_
