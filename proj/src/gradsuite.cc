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

#include "gain/gradsuite.h"

#include <fmt/format.h>

#include <functional>

#include "gain/crf.h"
#include "gain/gazetteer.h"
#include "gain/synth.h"
#include "gain/train.h"

namespace gain {

namespace {

using num::Var;
using num::Tensor;

Tensor random_tensor(Rng& rng, const std::vector<size_t>& shape, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

struct OpCase {
  const char* name;
  std::vector<std::vector<size_t>> input_shapes;
  std::function<Var(std::vector<Var>&)> apply;
};

std::vector<OpCase> op_cases() {
  using namespace num;
  static const std::vector<int> ids = {2, 0, 2, 4};
  static const std::vector<int> targets = {1, 0, 3};
  static const std::vector<int> gold = {1, 2, 0, 5};
  return {
      {"matmul", {{3, 4}, {4, 2}}, [](auto& in) { return matmul(in[0], in[1]); }},
      {"add", {{3, 4}, {3, 4}}, [](auto& in) { return add(in[0], in[1]); }},
      {"sub", {{3, 4}, {3, 4}}, [](auto& in) { return sub(in[0], in[1]); }},
      {"mul", {{3, 4}, {3, 4}}, [](auto& in) { return mul(in[0], in[1]); }},
      {"scale", {{3, 4}}, [](auto& in) { return scale(in[0], -2.5); }},
      {"add_row", {{3, 4}, {4}}, [](auto& in) { return add_row(in[0], in[1]); }},
      {"mul_row", {{3, 4}, {4}}, [](auto& in) { return mul_row(in[0], in[1]); }},
      {"relu", {{3, 4}}, [](auto& in) { return relu(in[0]); }},
      {"sigmoid", {{3, 4}}, [](auto& in) { return sigmoid(in[0]); }},
      {"tanh", {{3, 4}}, [](auto& in) { return num::tanh(in[0]); }},
      {"concat_cols", {{3, 4}, {3, 2}}, [](auto& in) { return concat_cols(in[0], in[1]); }},
      {"slice_cols", {{3, 5}}, [](auto& in) { return slice_cols(in[0], 1, 4); }},
      {"stack_rows", {{1, 3}, {1, 3}}, [](auto& in) { return stack_rows(in); }},
      {"embedding", {{5, 3}}, [](auto& in) { return embedding(in[0], ids); }},
      {"softmax_rows", {{3, 5}}, [](auto& in) { return softmax_rows(in[0]); }},
      {"log_softmax_rows", {{3, 5}}, [](auto& in) { return log_softmax_rows(in[0]); }},
      {"sum", {{3, 4}}, [](auto& in) { return sum(in[0]); }},
      {"mean", {{3, 4}}, [](auto& in) { return num::mean(in[0]); }},
      {"cross_entropy", {{3, 5}}, [](auto& in) { return cross_entropy(in[0], targets); }},
      {"kl_divergence", {{3, 13}, {3, 13}}, [](auto& in) { return kl_divergence(in[0], in[1]); }},
      {"kl_pair_loss", {{3, 13}, {3, 13}}, [](auto& in) { return kl_pair_loss(in[0], in[1]); }},
      {"mse_loss", {{3, 13}, {3, 13}}, [](auto& in) { return mse_loss(in[0], in[1]); }},
      {"lstm_cell",
       {{1, 3}, {1, 2}, {1, 2}, {3, 8}, {2, 8}, {8}},
       [](auto& in) {
         auto [h, c] = lstm_cell(in[0], in[1], in[2], {in[3], in[4], in[5]});
         return concat_cols(h, c);
       }},
      {"lstm_sequence",
       {{4, 3}, {3, 8}, {2, 8}, {8}},
       [](auto& in) { return lstm_sequence(in[0], {in[1], in[2], in[3]}, false); }},
      {"lstm_sequence_reverse",
       {{4, 3}, {3, 8}, {2, 8}, {8}},
       [](auto& in) { return lstm_sequence(in[0], {in[1], in[2], in[3]}, true); }},
      {"bilstm",
       {{4, 3}, {3, 8}, {2, 8}, {8}, {3, 8}, {2, 8}, {8}},
       [](auto& in) { return bilstm(in[0], {in[1], in[2], in[3]}, {in[4], in[5], in[6]}); }},
      {"crf_nll",
       {{4, kNumTags}, {kNumTags, kNumTags}, {kNumTags}, {kNumTags}},
       [](auto& in) { return crf_nll(in[0], in[1], in[2], in[3], gold); }},
  };
}

}  // namespace

std::vector<GradSuiteEntry> op_gradient_suite(double h, uint64_t seed) {
  Rng data_rng(derive_seed(seed, "gradsuite/ops"));
  std::vector<GradSuiteEntry> out;
  for (const auto& op : op_cases()) {
    num::ParamSet params;
    for (size_t i = 0; i < op.input_shapes.size(); ++i) {
      params.add(fmt::format("in{}", i), num::ParamGroup::kOther,
                 random_tensor(data_rng, op.input_shapes[i]));
    }
    std::vector<Var> probe;
    for (const auto& p : params) probe.push_back(Var::constant(p->value));
    // Fixed positive weights keep gradients of normalised outputs nonzero.
    const Tensor weights = random_tensor(data_rng, op.apply(probe).value().shape(), 0.5, 1.5);
    auto loss_fn = [&]() {
      std::vector<Var> in;
      for (const auto& p : params) in.push_back(num::param(*p));
      return num::sum(num::mul(op.apply(in), Var::constant(weights)));
    };
    Rng rng(derive_seed(seed, op.name));
    out.push_back({op.name, num::grad_check(loss_fn, params, h, 50, rng)});
  }
  return out;
}

std::vector<GradSuiteEntry> stage2_gradient_suite(double h, uint64_t seed) {
  SynthSpec spec;
  spec.template_pool = default_templates();
  spec.entity_source = EntitySource::kFresh;
  spec.context_mode = ContextMode::kLow;
  spec.n_sentences = 8;
  spec.seed = derive_seed(seed, "gradsuite/data");
  const SynthResult task = synth_corpus(spec, Gazetteer{});
  const MatchTrie trie(task.companion);
  std::vector<FeatureMatrix> features;
  for (size_t i = 0; i < 2; ++i) {
    features.push_back(
        match_features(trie, task.data.sentences[i].tokens, MatchPolicy::kLongest));
  }

  std::vector<GradSuiteEntry> out;
  for (auto kind : {ClassifierKind::kSoftmax, ClassifierKind::kCrf, ClassifierKind::kSpan}) {
    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden = 8;
    mc.gaz_hidden = 6;
    mc.integration = IntegrationMode::kWeightedSum;
    mc.classifier = kind;
    Model m(mc, Vocab::build(task.data, 1), derive_seed(seed, "gradsuite/model"));
    // Check at a generic point rather than the training init: zero biases
    // and empty feature rows leave many gazetteer-LSTM gradients near 1e-8,
    // below what a central difference on an O(10) loss can resolve.
    Rng prng(derive_seed(seed, "gradsuite/params"));
    for (const auto& p : m.params()) {
      for (double& v : p->value.values()) v = prng.uniform(-1.0, 1.0);
    }
    TrainConfig cfg;
    cfg.alpha = TrainConfig::default_alpha(kind);
    auto loss = [&] {
      Var a = stage2_loss(m, task.data.sentences[0], features[0], cfg, {}).total;
      Var b = stage2_loss(m, task.data.sentences[1], features[1], cfg, {}).total;
      return num::scale(num::add(a, b), 0.5);
    };
    Rng rng(derive_seed(seed, "gradsuite/stage2"));
    out.push_back({fmt::format("stage2 L3 {} alpha={}", classifier_name(kind), cfg.alpha),
                   num::grad_check(loss, m.params(), h, 10, rng)});
  }
  return out;
}

}  // namespace gain
