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

#include "gain/model.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "gain/crf.h"
#include "gain/errors.h"

namespace gain {

using num::ParamGroup;
using num::Parameter;
using num::Tensor;
using num::Var;

namespace {

template <typename E, size_t N>
E parse_enum(std::string_view name, const std::array<E, N>& all,
             std::string_view (*namer)(E), std::string_view what) {
  for (E e : all) {
    if (namer(e) == name) return e;
  }
  throw ConfigError(fmt::format("unknown {} '{}'", what, name));
}

Tensor uniform(std::vector<size_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

std::string_view integration_name(IntegrationMode mode) {
  switch (mode) {
    case IntegrationMode::kConcat:
      return "concat";
    case IntegrationMode::kWeightedSum:
      return "weighted_sum";
    case IntegrationMode::kNone:
      return "none";
  }
  return "none";
}

IntegrationMode parse_integration(std::string_view name) {
  return parse_enum(name,
                    std::array{IntegrationMode::kConcat, IntegrationMode::kWeightedSum,
                               IntegrationMode::kNone},
                    integration_name, "integration mode");
}

std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kSoftmax:
      return "softmax";
    case ClassifierKind::kCrf:
      return "crf";
    case ClassifierKind::kSpan:
      return "span";
  }
  return "softmax";
}

ClassifierKind parse_classifier(std::string_view name) {
  return parse_enum(
      name, std::array{ClassifierKind::kSoftmax, ClassifierKind::kCrf, ClassifierKind::kSpan},
      classifier_name, "classifier");
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kInitial:
      return "initial";
    case Stage::kPretrained:
      return "pretrained";
    case Stage::kAdapted:
      return "adapted";
    case Stage::kTrained:
      return "trained";
  }
  return "initial";
}

Stage parse_stage(std::string_view name) {
  return parse_enum(
      name, std::array{Stage::kInitial, Stage::kPretrained, Stage::kAdapted, Stage::kTrained},
      stage_name, "stage");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || gaz_hidden == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (hidden == 0 || hidden % 2 != 0) {
    throw ConfigError(fmt::format("model.hidden must be even and positive, got {}", hidden));
  }
  if (span_max_width == 0) throw ConfigError("model.span_max_width must be positive");
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() : Vocab(std::vector<std::string>{std::string(kUnkToken)}) {}

Vocab::Vocab(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.empty() || words_[0] != kUnkToken) {
    throw DataError("vocabulary must start with the unknown token");
  }
  for (size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], static_cast<int>(i)).second) {
      throw DataError(fmt::format("duplicate vocabulary entry '{}'", words_[i]));
    }
  }
}

Vocab Vocab::build(const Dataset& data, size_t min_count) {
  std::unordered_map<std::string, size_t> counts;
  std::vector<std::string> order;
  for (const auto& s : data.sentences) {
    for (const auto& tok : s.tokens) {
      if (counts[tok]++ == 0) order.push_back(tok);
    }
  }
  std::vector<std::string> words = {std::string(kUnkToken)};
  for (auto& w : order) {
    if (w != kUnkToken && counts[w] >= min_count) words.push_back(std::move(w));
  }
  return Vocab(std::move(words));
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

// ---------------------------------------------------------------------------
// Model

Model::Linear Model::add_linear(const std::string& prefix, ParamGroup group, size_t in,
                                size_t out) {
  Rng rng(derive_seed(seed_, prefix));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.w = &params_.add(prefix + ".w", group, uniform({in, out}, bound, rng));
  l.b = &params_.add(prefix + ".b", group, Tensor::vector(out));
  return l;
}

Model::Lstm Model::add_lstm(const std::string& prefix, ParamGroup group, size_t in,
                            size_t hidden) {
  Rng rng(derive_seed(seed_, prefix));
  Lstm l;
  l.wx = &params_.add(prefix + ".wx", group,
                      uniform({in, 4 * hidden}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  l.wh = &params_.add(
      prefix + ".wh", group,
      uniform({hidden, 4 * hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
  Tensor bias = Tensor::vector(4 * hidden);
  for (size_t j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;  // forget gate
  l.b = &params_.add(prefix + ".b", group, std::move(bias));
  return l;
}

Model::Model(ModelConfig config, Vocab vocab, uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), seed_(seed) {
  config_.validate();
  const size_t d = config_.hidden, half = d / 2;
  {
    Rng rng(derive_seed(seed_, "encoder.embedding"));
    embedding_ = &params_.add("encoder.embedding", ParamGroup::kEncoder,
                              uniform({vocab_.size(), config_.embed_dim}, 0.5, rng));
  }
  enc_fwd_ = add_lstm("encoder.fwd", ParamGroup::kEncoder, config_.embed_dim, half);
  enc_bwd_ = add_lstm("encoder.bwd", ParamGroup::kEncoder, config_.embed_dim, half);

  if (has_gaznet()) {
    gaz_dense_ = add_linear("gaznet.dense", ParamGroup::kGazetteerNet, kNumTags,
                            config_.gaz_hidden);
    gaz_fwd_ = add_lstm("gaznet.fwd", ParamGroup::kGazetteerNet, config_.gaz_hidden, half);
    gaz_bwd_ = add_lstm("gaznet.bwd", ParamGroup::kGazetteerNet, config_.gaz_hidden, half);
    head_e_ = add_linear("head_e", ParamGroup::kOther, d, kNumTags);
    head_g_ = add_linear("head_g", ParamGroup::kOther, d, kNumTags);
    if (config_.integration == IntegrationMode::kWeightedSum) {
      lambda_ = &params_.add("fusion.lambda", ParamGroup::kOther, Tensor::vector(d));
    }
  }

  const size_t f = fused_dim();
  switch (config_.classifier) {
    case ClassifierKind::kSoftmax:
      classifier_ = add_linear("classifier", ParamGroup::kOther, f, kNumTags);
      break;
    case ClassifierKind::kCrf: {
      classifier_ = add_linear("classifier", ParamGroup::kOther, f, kNumTags);
      Rng rng(derive_seed(seed_, "crf"));
      transitions_ = &params_.add("crf.transitions", ParamGroup::kCrf,
                                  uniform({kNumTags, kNumTags}, 0.1, rng));
      crf_start_ = &params_.add("crf.start", ParamGroup::kCrf, uniform({kNumTags}, 0.1, rng));
      crf_end_ = &params_.add("crf.end", ParamGroup::kCrf, uniform({kNumTags}, 0.1, rng));
      break;
    }
    case ClassifierKind::kSpan:
      span_start_ = add_linear("span.start", ParamGroup::kOther, f, kSpanClasses);
      span_end_ = add_linear("span.end", ParamGroup::kOther, f, kSpanClasses);
      break;
  }
}

size_t Model::fused_dim() const {
  return config_.integration == IntegrationMode::kConcat ? 2 * config_.hidden
                                                         : config_.hidden;
}

size_t Model::logit_cols() const {
  return config_.classifier == ClassifierKind::kSpan ? 2 * kSpanClasses : kNumTags;
}

Var Model::apply(const Linear& l, const Var& x) {
  return num::add_row(num::matmul(x, num::param(*l.w)), num::param(*l.b));
}

Var Model::run_bilstm(const Lstm& fwd, const Lstm& bwd, const Var& x) {
  const num::LstmWeights f{num::param(*fwd.wx), num::param(*fwd.wh), num::param(*fwd.b)};
  const num::LstmWeights b{num::param(*bwd.wx), num::param(*bwd.wh), num::param(*bwd.b)};
  return num::bilstm(x, f, b);
}

Var Model::encode(std::span<const std::string> tokens, const ForwardContext& ctx) {
  if (tokens.empty()) throw ContractError("encode: empty sentence");
  const std::vector<int> ids = vocab_.encode(tokens);
  Var x = num::embedding(num::param(*embedding_), ids);
  if (ctx.training && ctx.dropout > 0.0) x = num::dropout(x, ctx.dropout, *ctx.rng, true);
  return run_bilstm(enc_fwd_, enc_bwd_, x);
}

Var Model::gaznet(const FeatureMatrix& features, const ForwardContext& ctx) {
  if (!has_gaznet()) throw ContractError("gaznet: model has no gazetteer network");
  if (features.rows() == 0) throw ContractError("gaznet: empty feature matrix");
  Tensor x = Tensor::matrix(features.rows(), kNumTags);
  for (size_t i = 0; i < features.cells().size(); ++i) x[i] = features.cells()[i];
  Var h = num::relu(apply(gaz_dense_, Var::constant(std::move(x))));
  if (ctx.training && ctx.dropout > 0.0) h = num::dropout(h, ctx.dropout, *ctx.rng, true);
  return run_bilstm(gaz_fwd_, gaz_bwd_, h);
}

Var Model::project_e(const Var& e) {
  if (!has_gaznet()) throw ContractError("project_e: model has no projection heads");
  return apply(head_e_, e);
}

Var Model::project_g(const Var& g) {
  if (!has_gaznet()) throw ContractError("project_g: model has no projection heads");
  return apply(head_g_, g);
}

Var Model::integrate(const Var& e, const Var& g) {
  if (!e.value().same_shape(g.value())) {
    throw ContractError("integrate: e and g shapes differ");
  }
  switch (config_.integration) {
    case IntegrationMode::kConcat:
      return num::concat_cols(e, g);
    case IntegrationMode::kWeightedSum:
      // (1 - s) * e + s * g  ==  e + s * (g - e)
      return num::add(e, num::mul_row(num::sub(g, e), num::sigmoid(num::param(*lambda_))));
    case IntegrationMode::kNone:
      break;
  }
  throw ContractError("integrate: model has no gazetteer network");
}

Var Model::logits(const Var& fused, const ForwardContext& ctx) {
  if (fused.value().cols() != fused_dim()) {
    throw ContractError(fmt::format("logits: expected width {}, got {}", fused_dim(),
                                    fused.value().cols()));
  }
  Var x = fused;
  if (ctx.training && ctx.dropout > 0.0) x = num::dropout(x, ctx.dropout, *ctx.rng, true);
  if (config_.classifier == ClassifierKind::kSpan) {
    return num::concat_cols(apply(span_start_, x), apply(span_end_, x));
  }
  return apply(classifier_, x);
}

Var Model::classifier_loss(const Var& scores, std::span<const int> gold) {
  if (scores.value().rows() != gold.size()) {
    throw ContractError("classifier_loss: gold length differs from scores");
  }
  switch (config_.classifier) {
    case ClassifierKind::kSoftmax:
      return num::cross_entropy(scores, gold);
    case ClassifierKind::kCrf:
      return crf_nll(scores, num::param(*transitions_), num::param(*crf_start_),
                     num::param(*crf_end_), gold);
    case ClassifierKind::kSpan: {
      const auto [starts, ends] = span_targets(gold);
      return num::add(num::cross_entropy(num::slice_cols(scores, 0, kSpanClasses), starts),
                      num::cross_entropy(
                          num::slice_cols(scores, kSpanClasses, 2 * kSpanClasses), ends));
    }
  }
  throw ContractError("classifier_loss: unknown classifier");
}

std::vector<int> Model::decode(const Tensor& scores) const {
  if (scores.ndim() != 2 || scores.cols() != logit_cols()) {
    throw ContractError(fmt::format("decode: expected {} columns", logit_cols()));
  }
  switch (config_.classifier) {
    case ClassifierKind::kSoftmax:
      return repair_bio(argmax_rows(scores));
    case ClassifierKind::kCrf:
      return repair_bio(crf_viterbi(
          {scores, transitions_->value, crf_start_->value, crf_end_->value}));
    case ClassifierKind::kSpan:
      return span_decode(argmax_rows(scores, 0, kSpanClasses),
                         argmax_rows(scores, kSpanClasses, 2 * kSpanClasses),
                         config_.span_max_width);
  }
  throw ContractError("decode: unknown classifier");
}

Prediction Model::predict(std::span<const std::string> tokens, const FeatureMatrix* features) {
  const ForwardContext eval;
  Var fused = encode(tokens, eval);
  if (has_gaznet()) {
    if (features == nullptr) throw ContractError("predict: gazetteer features required");
    fused = integrate(fused, gaznet(*features, eval));
  }
  Prediction p;
  p.logits = logits(fused, eval).value();
  p.tags = decode(p.logits);
  return p;
}

std::vector<double> Model::lambda_weights() const {
  std::vector<double> out;
  if (lambda_ == nullptr) return out;
  for (double v : lambda_->value.values()) out.push_back(1.0 / (1.0 + std::exp(-v)));
  return out;
}

double Model::mean_lambda() const {
  const auto w = lambda_weights();
  if (w.empty()) return 0.0;
  double s = 0.0;
  for (double v : w) s += v;
  return s / static_cast<double>(w.size());
}

void Model::adopt_encoder(const Model& other) {
  if (!(other.vocab_ == vocab_) || other.config_.embed_dim != config_.embed_dim ||
      other.config_.hidden != config_.hidden) {
    throw ContractError("adopt_encoder: vocabulary or encoder dimensions differ");
  }
  for (const auto& p : other.params_) {
    if (p->name.starts_with("encoder.")) params_.get(p->name).value = p->value;
  }
}

// ---------------------------------------------------------------------------
// Decoding helpers

std::vector<int> argmax_rows(const Tensor& scores, size_t begin, size_t end) {
  if (end == 0) end = scores.cols();
  std::vector<int> out(scores.rows());
  for (size_t r = 0; r < scores.rows(); ++r) {
    size_t best = begin;
    for (size_t c = begin + 1; c < end; ++c) {
      if (scores.at(r, c) > scores.at(r, best)) best = c;
    }
    out[r] = static_cast<int>(best - begin);
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> span_targets(std::span<const int> tags) {
  std::vector<int> starts(tags.size(), 0), ends(tags.size(), 0);
  for (const auto& sp : entity_spans(tags)) {
    starts[sp.start] = 1 + type_index(sp.type);
    ends[sp.end - 1] = 1 + type_index(sp.type);
  }
  return {std::move(starts), std::move(ends)};
}

std::vector<int> span_decode(std::span<const int> start_class, std::span<const int> end_class,
                             size_t max_width) {
  const size_t n = start_class.size();
  if (end_class.size() != n) throw ContractError("span_decode: length mismatch");
  std::vector<bool> consumed(n, false);
  std::vector<EntitySpan> spans;
  size_t i = 0;
  while (i < n) {
    const int t = start_class[i];
    if (t <= 0) {
      ++i;
      continue;
    }
    size_t match = n;
    for (size_t j = i; j < n && j < i + max_width; ++j) {
      if (!consumed[j] && end_class[j] == t) {
        match = j;
        break;
      }
    }
    if (match == n) {
      ++i;
      continue;
    }
    consumed[match] = true;
    spans.push_back({i, match + 1, static_cast<EntityType>(t - 1)});
    i = match + 1;
  }
  return spans_to_tags(spans, n);
}

}  // namespace gain
