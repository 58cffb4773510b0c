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
#include <limits>

#include "doctest.h"
#include "gain/corpus.h"
#include "gain/crf.h"
#include "gain/errors.h"
#include "gain/gazetteer.h"
#include "gain/model.h"
#include "gain/num/gradcheck.h"
#include "test_util.h"

namespace gain {
namespace {

using num::Tensor;
using num::Var;
using testing::split;
using testing::tags_of;

Tensor random_tensor(std::vector<size_t> shape, Rng& rng, double bound = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

struct CrfCase {
  Tensor emissions, transitions, start, end;
  CrfScores scores() const { return {emissions, transitions, start, end}; }
};

CrfCase random_crf(Rng& rng, size_t n, double bound = 2.0) {
  return {random_tensor({n, kNumTags}, rng, bound),
          random_tensor({kNumTags, kNumTags}, rng, bound),
          random_tensor({kNumTags}, rng, bound), random_tensor({kNumTags}, rng, bound)};
}

// Calls f(path) for every one of 13^n tag paths.
template <typename F>
void for_each_path(size_t n, F f) {
  std::vector<int> path(n, 0);
  while (true) {
    f(path);
    size_t i = 0;
    while (i < n && ++path[i] == kNumTags) path[i++] = 0;
    if (i == n) return;
  }
}

// Independent path score: start + emissions + transitions + end.
double direct_score(const CrfCase& c, const std::vector<int>& y) {
  auto u = [](int v) { return static_cast<size_t>(v); };
  double s = c.start[u(y[0])] + c.end[u(y.back())];
  for (size_t i = 0; i < y.size(); ++i) {
    s += c.emissions.at(i, u(y[i]));
    if (i > 0) s += c.transitions.at(u(y[i - 1]), u(y[i]));
  }
  return s;
}

TEST_CASE("crf logZ matches brute-force enumeration") {
  Rng rng(101);
  for (size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      CrfCase c = random_crf(rng, n);
      double mx = -std::numeric_limits<double>::infinity();
      for_each_path(n, [&](const std::vector<int>& y) { mx = std::max(mx, direct_score(c, y)); });
      double total = 0.0;
      for_each_path(n, [&](const std::vector<int>& y) { total += std::exp(direct_score(c, y) - mx); });
      const double log_z = crf_log_partition(c.scores());
      CHECK(std::abs(log_z - (mx + std::log(total))) < 1e-8);

      double prob = 0.0;
      for_each_path(n, [&](const std::vector<int>& y) {
        prob += std::exp(crf_path_score(c.scores(), y) - log_z);
      });
      CHECK(std::abs(prob - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("crf viterbi attains the exhaustive maximum") {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<size_t>(rng.range(1, 5));
    CrfCase c = random_crf(rng, n);
    double mx = -std::numeric_limits<double>::infinity();
    for_each_path(n, [&](const std::vector<int>& y) { mx = std::max(mx, direct_score(c, y)); });
    const auto best = crf_viterbi(c.scores());
    REQUIRE(best.size() == n);
    CHECK(std::abs(direct_score(c, best) - mx) < 1e-9);
  }
}

TEST_CASE("crf single token with uniform scores reduces to softmax") {
  CrfCase c{Tensor::matrix(1, kNumTags), Tensor::matrix(kNumTags, kNumTags),
            Tensor::vector(kNumTags), Tensor::vector(kNumTags)};
  Var loss = crf_nll(Var::constant(c.emissions), Var::constant(c.transitions),
                     Var::constant(c.start), Var::constant(c.end), std::vector<int>{3});
  CHECK(loss.item() == doctest::Approx(std::log(13.0)).epsilon(1e-12));
}

TEST_CASE("crf loss is non-negative and vanishes for a dominant gold path") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<size_t>(rng.range(1, 6));
    CrfCase c = random_crf(rng, n);
    auto gold = testing::random_bio(rng, n);
    Var loss = crf_nll(Var::constant(c.emissions), Var::constant(c.transitions),
                       Var::constant(c.start), Var::constant(c.end), gold);
    CHECK(loss.item() >= 0.0);
  }
  CrfCase c{Tensor::matrix(3, kNumTags), Tensor::matrix(kNumTags, kNumTags),
            Tensor::vector(kNumTags), Tensor::vector(kNumTags)};
  const auto gold = tags_of({"B-PER", "I-PER", "O"});
  for (size_t i = 0; i < 3; ++i) c.emissions.at(i, static_cast<size_t>(gold[i])) = 1000.0;
  Var loss = crf_nll(Var::constant(c.emissions), Var::constant(c.transitions),
                     Var::constant(c.start), Var::constant(c.end), gold);
  CHECK(loss.item() < 1e-12);
  CHECK(crf_viterbi(c.scores()) == gold);
}

TEST_CASE("crf viterbi is invariant to per-row emission shifts") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    CrfCase c = random_crf(rng, 6);
    const auto before = crf_viterbi(c.scores());
    for (size_t i = 0; i < 6; ++i) {
      const double shift = rng.uniform(-5, 5);
      for (double& v : c.emissions.row(i)) v += shift;
    }
    CHECK(crf_viterbi(c.scores()) == before);
  }
}

TEST_CASE("crf viterbi breaks ties toward the lowest tag") {
  CrfCase c{Tensor::matrix(2, kNumTags), Tensor::matrix(kNumTags, kNumTags),
            Tensor::vector(kNumTags), Tensor::vector(kNumTags)};
  CHECK(crf_viterbi(c.scores()) == std::vector<int>{0, 0});
}

TEST_CASE("crf_nll gradients match finite differences") {
  Rng rng(31);
  num::ParamSet ps;
  CrfCase c = random_crf(rng, 4, 1.0);
  auto& em = ps.add("em", num::ParamGroup::kOther, c.emissions);
  auto& tr = ps.add("tr", num::ParamGroup::kCrf, c.transitions);
  auto& st = ps.add("st", num::ParamGroup::kCrf, c.start);
  auto& en = ps.add("en", num::ParamGroup::kCrf, c.end);
  const auto gold = tags_of({"O", "B-LOC", "I-LOC", "B-CW"});
  auto loss = [&] {
    return crf_nll(num::param(em), num::param(tr), num::param(st), num::param(en), gold);
  };
  auto r = num::grad_check(loss, ps, 1e-5, 400, rng);
  CHECK(r.max_relative_error < 1e-4);
}

// ---------------------------------------------------------------------------

ModelConfig small_config(IntegrationMode mode, ClassifierKind kind) {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden = 8;
  cfg.gaz_hidden = 6;
  cfg.integration = mode;
  cfg.classifier = kind;
  return cfg;
}

Vocab toy_vocab() {
  return Vocab({"<unk>", "where", "to", "buy", "apple", "iphone", "13"});
}

Gazetteer iphone_gazetteer() {
  return parse_gazetteer("apple iphone 13\tPROD\niphone 13\tPROD\napple\tPROD\napple\tCORP\n");
}

TEST_CASE("vocab maps unknown tokens to id 0") {
  Dataset d;
  d.sentences.push_back({{"a", "b", "a"}, tags_of({"O", "O", "O"})});
  Vocab v = Vocab::build(d, 2);
  CHECK(v.size() == 2);
  CHECK(v.id("a") == 1);
  CHECK(v.id("b") == Vocab::kUnk);
  CHECK_THROWS_AS(Vocab({"a"}), DataError);
}

TEST_CASE("encoder output shape and determinism") {
  ModelConfig cfg;  // D = 64
  Model m(cfg, toy_vocab(), 1);
  const auto tokens = split("where to buy apple iphone 13");
  Var e1 = m.encode(tokens, {});
  Var e2 = m.encode(tokens, {});
  CHECK(e1.value().shape() == std::vector<size_t>{6, 64});
  CHECK(e1.value().bit_equal(e2.value()));

  const auto oov = split("zz yy xx");
  const auto unk = std::vector<std::string>(3, "<unk>");
  CHECK(m.encode(oov, {}).value().bit_equal(m.encode(unk, {}).value()));
}

TEST_CASE("gaznet output shape and zero parameters") {
  ModelConfig cfg;
  Model m(cfg, toy_vocab(), 2);
  MatchTrie trie(iphone_gazetteer());
  const auto tokens = split("where to buy apple iphone 13");
  FeatureMatrix f = match_features(trie, tokens, MatchPolicy::kLongest);
  Var g = m.gaznet(f, {});
  CHECK(g.value().shape() == std::vector<size_t>{6, 64});
  CHECK(g.value().shape() == m.encode(tokens, {}).value().shape());

  for (const auto& p : m.params()) {
    if (p->name.starts_with("gaznet.")) p->value.fill(0.0);
  }
  for (double v : m.gaznet(f, {}).value().values()) CHECK(v == 0.0);
}

TEST_CASE("gaznet gradients match finite differences") {
  Model m(small_config(IntegrationMode::kConcat, ClassifierKind::kSoftmax), toy_vocab(), 3);
  MatchTrie trie(iphone_gazetteer());
  FeatureMatrix f = match_features(trie, split("where to buy apple iphone 13"),
                                   MatchPolicy::kAll);
  std::vector<num::Parameter*> gaz;
  for (const auto& p : m.params()) {
    if (p->name.starts_with("gaznet.")) gaz.push_back(p.get());
  }
  Rng rng(4);
  Tensor weights = random_tensor({6, 8}, rng);
  auto loss = [&] { return num::sum(num::mul(m.gaznet(f, {}), Var::constant(weights))); };
  auto r = num::grad_check(loss, gaz, 1e-5, 60, rng);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("integrate by concatenation and weighted sum") {
  Rng rng(5);
  Var e = Var::constant(random_tensor({6, 64}, rng));
  Var g = Var::constant(random_tensor({6, 64}, rng));

  Model cat(ModelConfig{}, toy_vocab(), 1);
  Var c = cat.integrate(e, g);
  CHECK(c.value().shape() == std::vector<size_t>{6, 128});
  for (size_t r = 0; r < 6; ++r) {
    for (size_t k = 0; k < 64; ++k) {
      CHECK(c.value().at(r, k) == e.value().at(r, k));
      CHECK(c.value().at(r, 64 + k) == g.value().at(r, k));
    }
  }

  ModelConfig ws_cfg;
  ws_cfg.integration = IntegrationMode::kWeightedSum;
  Model ws(ws_cfg, toy_vocab(), 1);
  CHECK(ws.mean_lambda() == 0.5);
  Var half = ws.integrate(e, g);
  for (size_t i = 0; i < half.value().size(); ++i) {
    CHECK(half.value()[i] ==
          doctest::Approx((e.value()[i] + g.value()[i]) / 2).epsilon(1e-14));
  }
  ws.params().get("fusion.lambda").value.fill(-1000.0);
  CHECK(ws.integrate(e, g).value() == e.value());

  Var bad = Var::constant(Tensor::matrix(5, 64));
  CHECK_THROWS_AS(ws.integrate(e, bad), ContractError);
}

TEST_CASE("weighted sum with closed gate ignores gazetteer features") {
  ModelConfig cfg = small_config(IntegrationMode::kWeightedSum, ClassifierKind::kSoftmax);
  Model m(cfg, toy_vocab(), 6);
  m.params().get("fusion.lambda").value.fill(-1000.0);
  const auto tokens = split("where to buy apple iphone 13");
  Rng rng(6);
  const FeatureMatrix empty(6);
  const Prediction base = m.predict(tokens, &empty);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix f(6);
    for (size_t r = 0; r < 6; ++r) {
      for (size_t c = 0; c < kNumTags; ++c) f.set(r, c, rng.bernoulli(0.3) ? 1 : 0);
    }
    CHECK(m.predict(tokens, &f).logits == base.logits);
  }
}

TEST_CASE("softmax tagger loss and decode") {
  Model m(small_config(IntegrationMode::kNone, ClassifierKind::kSoftmax), toy_vocab(), 1);
  const auto gold = tags_of({"O", "B-PER", "I-PER", "B-CW"});
  Tensor uniform = Tensor::matrix(4, kNumTags);
  CHECK(m.classifier_loss(Var::constant(uniform), gold).item() ==
        doctest::Approx(std::log(13.0)).epsilon(1e-12));

  Tensor peaked = Tensor::matrix(4, kNumTags);
  for (size_t i = 0; i < 4; ++i) peaked.at(i, static_cast<size_t>(gold[i])) = 1000.0;
  CHECK(m.classifier_loss(Var::constant(peaked), gold).item() < 1e-12);
  CHECK(m.decode(peaked) == gold);

  Tensor orphan = Tensor::matrix(2, kNumTags);
  orphan.at(0, 0) = 5.0;
  orphan.at(1, static_cast<size_t>(*parse_tag("I-PER"))) = 5.0;
  CHECK(m.decode(orphan) == tags_of({"O", "B-PER"}));
}

TEST_CASE("span targets and decoding") {
  auto [starts, ends] = span_targets(tags_of({"O", "B-PER", "I-PER", "O"}));
  CHECK(starts == std::vector<int>{0, 1, 0, 0});
  CHECK(ends == std::vector<int>{0, 0, 1, 0});

  // start(PER)@0, end(PER)@2, nothing in between.
  CHECK(span_decode(std::vector<int>{1, 0, 0}, std::vector<int>{0, 0, 1}, 10) ==
        tags_of({"B-PER", "I-PER", "I-PER"}));
  // Unmatched start is dropped; width cap applies.
  CHECK(span_decode(std::vector<int>{2, 0, 0}, std::vector<int>{0, 0, 1}, 10) ==
        tags_of({"O", "O", "O"}));
  CHECK(span_decode(std::vector<int>{1, 0, 0}, std::vector<int>{0, 0, 1}, 2) ==
        tags_of({"O", "O", "O"}));
  // A start inside an emitted span is skipped; ends are consumed once.
  CHECK(span_decode(std::vector<int>{1, 1, 0}, std::vector<int>{0, 1, 0}, 10) ==
        tags_of({"B-PER", "I-PER", "O"}));

  Model m(small_config(IntegrationMode::kNone, ClassifierKind::kSpan), toy_vocab(), 1);
  const auto gold = tags_of({"B-LOC", "I-LOC", "O", "B-CW", "B-PER"});
  auto [s, e] = span_targets(gold);
  Tensor logits = Tensor::matrix(5, 2 * kSpanClasses);
  for (size_t i = 0; i < 5; ++i) {
    logits.at(i, static_cast<size_t>(s[i])) = 1000.0;
    logits.at(i, kSpanClasses + static_cast<size_t>(e[i])) = 1000.0;
  }
  CHECK(m.decode(logits) == gold);
  CHECK(m.classifier_loss(Var::constant(logits), gold).item() < 1e-12);
  Tensor flat = Tensor::matrix(5, 2 * kSpanClasses);
  CHECK(m.classifier_loss(Var::constant(flat), gold).item() ==
        doctest::Approx(2 * std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("every classifier decodes to valid BIO") {
  Rng rng(12);
  for (auto kind : {ClassifierKind::kSoftmax, ClassifierKind::kCrf, ClassifierKind::kSpan}) {
    Model m(small_config(IntegrationMode::kNone, kind), toy_vocab(), 1);
    for (int trial = 0; trial < 200; ++trial) {
      const auto n = static_cast<size_t>(rng.range(1, 12));
      Tensor logits = random_tensor({n, m.logit_cols()}, rng, 3.0);
      CHECK(validate_bio(m.decode(logits)).empty());
    }
  }
}

TEST_CASE("full model gradients for every classifier and integration") {
  const auto tokens = split("where to buy apple iphone 13");
  const auto gold = tags_of({"O", "O", "O", "B-PROD", "I-PROD", "I-PROD"});
  MatchTrie trie(iphone_gazetteer());
  FeatureMatrix f = match_features(trie, tokens, MatchPolicy::kLongest);
  for (auto mode : {IntegrationMode::kConcat, IntegrationMode::kWeightedSum,
                    IntegrationMode::kNone}) {
    for (auto kind : {ClassifierKind::kSoftmax, ClassifierKind::kCrf, ClassifierKind::kSpan}) {
      Model m(small_config(mode, kind), toy_vocab(), 8);
      auto loss = [&] {
        Var fused = m.encode(tokens, {});
        if (m.has_gaznet()) fused = m.integrate(fused, m.gaznet(f, {}));
        return m.classifier_loss(m.logits(fused, {}), gold);
      };
      Rng rng(9);
      auto r = num::grad_check(loss, m.params(), 1e-5, 12, rng);
      INFO(integration_name(mode), " ", classifier_name(kind), " ", r.worst_parameter);
      CHECK(r.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("adopt_encoder copies only encoder parameters") {
  Model a(small_config(IntegrationMode::kNone, ClassifierKind::kSoftmax), toy_vocab(), 1);
  Model b(small_config(IntegrationMode::kConcat, ClassifierKind::kCrf), toy_vocab(), 2);
  b.adopt_encoder(a);
  for (const auto& p : a.params()) {
    if (p->name.starts_with("encoder.")) CHECK(b.params().get(p->name).value == p->value);
  }
  Model c(small_config(IntegrationMode::kNone, ClassifierKind::kSoftmax), Vocab(), 1);
  CHECK_THROWS_AS(c.adopt_encoder(a), ContractError);
}

TEST_CASE("model config validation") {
  ModelConfig cfg;
  cfg.hidden = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_integration("weighted_sum") == IntegrationMode::kWeightedSum);
  CHECK_THROWS_AS(parse_classifier("biaffine"), ConfigError);
}

}  // namespace
}  // namespace gain
