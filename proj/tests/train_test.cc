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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gain/errors.h"
#include "gain/num/gradcheck.h"
#include "gain/synth.h"
#include "gain/train.h"
#include "test_util.h"

namespace gain {
namespace {

using num::Tensor;
using num::Var;

struct Task {
  Dataset pretrain, train, val;
  Gazetteer gaz;
};

// Small gazetteer-dependent task: fresh entity strings, low context.
Task small_task(size_t n_train = 60, size_t n_val = 20) {
  SynthSpec spec;
  spec.template_pool = default_templates();
  spec.entity_source = EntitySource::kFresh;
  spec.context_mode = ContextMode::kRich;
  spec.n_sentences = 60;
  spec.seed = 1;
  Task t;
  t.pretrain = synth_corpus(spec, Gazetteer{}).data;
  spec.context_mode = ContextMode::kLow;
  spec.n_sentences = n_train;
  spec.seed = 2;
  SynthResult tr = synth_corpus(spec, Gazetteer{});
  spec.n_sentences = n_val;
  spec.seed = 3;
  SynthResult va = synth_corpus(spec, Gazetteer{});
  t.train = tr.data;
  t.val = va.data;
  t.gaz = tr.companion;
  for (EntityType l : kAllTypes) {
    for (const auto& s : va.companion.entries(l)) t.gaz.add(s, l);
  }
  return t;
}

ModelConfig small_model(IntegrationMode mode = IntegrationMode::kConcat,
                        ClassifierKind kind = ClassifierKind::kSoftmax) {
  ModelConfig m;
  m.embed_dim = 8;
  m.hidden = 8;
  m.gaz_hidden = 6;
  m.integration = mode;
  m.classifier = kind;
  return m;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.pretrain_epochs = 2;
  c.stage1_epochs = 2;
  c.stage2_epochs = 2;
  c.batch_size = 8;
  c.seed = 5;
  return c;
}

TEST_CASE("pretrain with zero epochs leaves the initialisation") {
  Task t = small_task();
  TrainConfig cfg = quick_config();
  cfg.pretrain_epochs = 0;
  Model a = pretrain_encoder(t.pretrain, small_model(), cfg);
  cfg.pretrain_epochs = 0;
  Model fresh(a.config(), a.vocab(), a.seed());
  for (const auto& p : a.params()) CHECK(p->value.bit_equal(fresh.params().get(p->name).value));
  CHECK(a.stage() == Stage::kPretrained);
  CHECK_FALSE(a.has_gaznet());
}

TEST_CASE("stage 1 leaves encoder and classifier untouched") {
  Task t = small_task();
  TrainConfig cfg = quick_config();
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  Model m = make_gain_model(pre, small_model(), 9);
  std::vector<std::pair<std::string, Tensor>> frozen;
  for (const auto& p : m.params()) {
    if (!p->name.starts_with("gaznet.") && !p->name.starts_with("head_")) {
      frozen.emplace_back(p->name, p->value);
    }
  }
  TrainLog log;
  stage1_adapt(m, t.train, cfg, &log);
  for (const auto& [name, value] : frozen) {
    INFO(name);
    CHECK(m.params().get(name).value.bit_equal(value));
  }
  CHECK(m.stage() == Stage::kAdapted);
  CHECK(log.epochs.size() == 2);
  CHECK_FALSE(m.params().get("gaznet.dense.w").value == Model(small_model(), pre.vocab(), 9)
                                                             .params()
                                                             .get("gaznet.dense.w")
                                                             .value);
}

TEST_CASE("stage 1 requires a pretrained encoder") {
  Task t = small_task();
  Model m(small_model(), Vocab(), 1);
  CHECK_THROWS_AS(stage1_adapt(m, t.train, quick_config()), ContractError);
}

TEST_CASE("stage 1 loss falls under both adaptation losses") {
  Task t = small_task(120);
  TrainConfig cfg = quick_config();
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  cfg.stage1_epochs = 5;
  for (auto kind : {AdaptationLoss::kKl, AdaptationLoss::kMse}) {
    cfg.adaptation_loss = kind;
    Model m = make_gain_model(pre, small_model(), 3);
    TrainLog log;
    stage1_adapt(m, t.train, cfg, &log);
    REQUIRE(log.epochs.size() == 5);
    for (const auto& e : log.epochs) CHECK(std::isfinite(e.mean_loss));
    CHECK(log.epochs.front().mean_loss > log.epochs.back().mean_loss);
  }
}

TEST_CASE("L3 is linear in alpha") {
  Task t = small_task();
  Model m(small_model(), Vocab::build(t.train, 1), 4);
  MatchTrie trie(t.gaz);
  const Sentence& s = t.train.sentences[0];
  const FeatureMatrix f = match_features(trie, s.tokens, MatchPolicy::kLongest);
  TrainConfig cfg;
  cfg.alpha = 0.0;
  const Stage2Loss base = stage2_loss(m, s, f, cfg, {});
  CHECK(std::abs(base.total.item() - base.l2.item()) <= 1e-12);
  for (double alpha : {5.0, 100.0}) {
    cfg.alpha = alpha;
    const Stage2Loss l = stage2_loss(m, s, f, cfg, {});
    CHECK(std::abs((l.total.item() - base.total.item()) - alpha * l.l1.item()) < 1e-10);
  }
}

TEST_CASE("stage-2 loss gradients match finite differences") {
  Task t = small_task();
  MatchTrie trie(t.gaz);
  for (auto kind : {ClassifierKind::kSoftmax, ClassifierKind::kCrf, ClassifierKind::kSpan}) {
    Model m(small_model(IntegrationMode::kWeightedSum, kind), Vocab::build(t.train, 1), 6);
    TrainConfig cfg;
    cfg.alpha = TrainConfig::default_alpha(kind);
    std::vector<FeatureMatrix> f;
    for (size_t i = 0; i < 2; ++i) {
      f.push_back(match_features(trie, t.train.sentences[i].tokens, MatchPolicy::kLongest));
    }
    auto loss = [&] {
      Var a = stage2_loss(m, t.train.sentences[0], f[0], cfg, {}).total;
      Var b = stage2_loss(m, t.train.sentences[1], f[1], cfg, {}).total;
      return num::scale(num::add(a, b), 0.5);
    };
    // With alpha = 100 the loss is large enough that rounding in a 1e-5
    // central difference swamps gradients near 1e-6; a wider step keeps
    // truncation error far below the tolerance.
    const double h = kind == ClassifierKind::kCrf ? 1e-4 : 1e-5;
    Rng rng(7);
    auto r = num::grad_check(loss, m.params(), h, 10, rng);
    INFO(classifier_name(kind), " ", r.worst_parameter, " ", r.analytic, " ", r.numeric);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("stage 2 restores the best validation epoch") {
  Task t = small_task();
  TrainConfig cfg = quick_config();
  cfg.stage2_epochs = 3;
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  Model m = make_gain_model(pre, small_model(), 2);
  stage1_adapt(m, t.train, cfg);
  MatchTrie trie(t.gaz);
  TrainLog log;
  stage2_train(m, t.train, &t.val, trie, cfg, &log);
  REQUIRE(log.epochs.size() == 3);
  REQUIRE(log.best_epoch >= 1);
  double best = 0.0;
  for (const auto& e : log.epochs) best = std::max(best, e.val_macro_f1);
  CHECK(log.best_val_f1 == best);
  CHECK(evaluate_model(m, t.val, &trie, cfg.match_policy).macro_f1 == best);
  CHECK(m.stage() == Stage::kTrained);
}

TEST_CASE("stage 2 rejects an empty dataset and unready models") {
  Task t = small_task();
  TrainConfig cfg = quick_config();
  MatchTrie trie(t.gaz);
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  Model m = make_gain_model(pre, small_model(), 2);
  CHECK_THROWS_AS(stage2_train(m, t.train, nullptr, trie, cfg), ContractError);
  cfg.skip_stage1 = true;
  CHECK_THROWS_AS(stage2_train(m, Dataset{}, nullptr, trie, cfg), DataError);
}

std::string full_run(const Task& t, const TrainConfig& cfg) {
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  Model m = make_gain_model(pre, small_model(IntegrationMode::kWeightedSum), 2);
  stage1_adapt(m, t.train, cfg);
  MatchTrie trie(t.gaz);
  stage2_train(m, t.train, &t.val, trie, cfg);
  return serialize_checkpoint(m, cfg);
}

TEST_CASE("training is deterministic") {
  Task t = small_task();
  TrainConfig cfg = quick_config();
  CHECK(full_run(t, cfg) == full_run(t, cfg));
}

TEST_CASE("checkpoint round trip") {
  Task t = small_task(100);
  TrainConfig cfg = quick_config();
  cfg.alpha = 100.0;
  Model pre = pretrain_encoder(t.pretrain, small_model(), cfg);
  Model m = make_gain_model(pre, small_model(IntegrationMode::kConcat, ClassifierKind::kCrf), 3);
  stage1_adapt(m, t.train, cfg);

  const std::string bytes = serialize_checkpoint(m, cfg);
  Checkpoint back = parse_checkpoint(bytes);
  CHECK(serialize_checkpoint(back.model, back.train) == bytes);
  CHECK(back.model.stage() == Stage::kAdapted);
  CHECK(back.train.alpha == 100.0);
  CHECK(back.model.config() == m.config());

  MatchTrie trie(t.gaz);
  const auto a = predict_dataset(m, t.train, &trie, MatchPolicy::kLongest);
  const auto b = predict_dataset(back.model, t.train, &trie, MatchPolicy::kLongest);
  REQUIRE(a.size() == 100);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tags == b[i].tags);
    CHECK(a[i].logits.bit_equal(b[i].logits));
  }

  const auto path = std::filesystem::temp_directory_path() / "gain_train_test.ckpt";
  save_checkpoint(m, cfg, path.string());
  CHECK(serialize_checkpoint(load_checkpoint(path.string()).model, cfg) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are data errors") {
  Task t = small_task();
  Model m(small_model(), Vocab::build(t.train, 1), 1);
  const std::string bytes = serialize_checkpoint(m, TrainConfig{});
  for (size_t cut : {size_t{3}, size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, cut)), DataError);
  }
  std::string wrong_version = bytes;
  wrong_version[8] = 2;
  try {
    parse_checkpoint(wrong_version);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find('2') != std::string::npos);
    CHECK(what.find('1') != std::string::npos);
  }
  CHECK_THROWS_AS(parse_checkpoint("NOTACKPT"), DataError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), DataError);
}

TEST_CASE("config JSON round trip and validation") {
  TrainConfig cfg;
  cfg.alpha = 100;
  cfg.adaptation_loss = AdaptationLoss::kMse;
  cfg.stage2_l1_source = L1Source::kMatched;
  cfg.optimizer.learning_rates[num::ParamGroup::kCrf] = 0.05;
  TrainConfig back = train_config_from_json(train_config_json(cfg));
  CHECK(train_config_json(back) == train_config_json(cfg));
  CHECK_THROWS_AS(train_config_from_json({{"alhpa", 1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"alpha", -1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"adaptation_loss", "l2"}}), ConfigError);

  ModelConfig mc = small_model(IntegrationMode::kWeightedSum, ClassifierKind::kSpan);
  CHECK(model_config_from_json(model_config_json(mc)) == mc);
}

}  // namespace
}  // namespace gain
