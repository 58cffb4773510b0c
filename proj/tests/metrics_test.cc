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

#include <fmt/format.h>

#include "doctest.h"
#include "gain/errors.h"
#include "gain/metrics.h"
#include "test_util.h"

namespace gain {
namespace {

using testing::tags_of;

Dataset with_tags(std::vector<std::vector<int>> tags) {
  Dataset d;
  for (auto& t : tags) {
    Sentence s;
    for (size_t i = 0; i < t.size(); ++i) s.tokens.push_back(fmt::format("w{}", i));
    s.tags = std::move(t);
    d.sentences.push_back(std::move(s));
  }
  return d;
}

TEST_CASE("perfect predictions score 1") {
  Rng rng(1);
  Dataset gold = testing::random_dataset(rng, 50);
  EvalReport r = evaluate(gold, gold);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.md_f1 == 1.0);
  for (EntityType t : kAllTypes) {
    if (r.in_macro(t)) CHECK(r.label(t).f1 == 1.0);
  }
}

TEST_CASE("right span with wrong type counts for mention detection only") {
  Dataset gold = with_tags({tags_of({"B-PER", "I-PER"})});
  Dataset pred = with_tags({tags_of({"B-LOC", "I-LOC"})});
  EvalReport r = evaluate(pred, gold);
  CHECK(r.label(EntityType::kPer).recall == 0.0);
  CHECK(r.label(EntityType::kLoc).precision == 0.0);
  CHECK(r.md_f1 == 1.0);
  CHECK(r.macro_f1 == 0.0);
}

TEST_CASE("hand-computed three-label example") {
  // gold: PER (0,1), PER (2,4), LOC (5,6)
  // pred: PER (0,1) correct, PROD (2,3) spurious, LOC (5,6) correct
  Dataset gold = with_tags({tags_of({"B-PER", "O", "B-PER", "I-PER", "O", "B-LOC"})});
  Dataset pred = with_tags({tags_of({"B-PER", "O", "B-PROD", "O", "O", "B-LOC"})});
  EvalReport r = evaluate(pred, gold);
  const LabelScore& per = r.label(EntityType::kPer);
  CHECK(per.gold_count == 2);
  CHECK(per.pred_count == 1);
  CHECK(per.matched_count == 1);
  CHECK(per.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.label(EntityType::kLoc).f1 == 1.0);
  CHECK(r.label(EntityType::kProd).f1 == 0.0);
  CHECK(r.in_macro(EntityType::kProd));
  CHECK_FALSE(r.in_macro(EntityType::kCw));
  CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0 + 1.0 + 0.0) / 3.0).epsilon(1e-15));
  // Mentions: gold {(0,1),(2,4),(5,6)}, pred {(0,1),(2,3),(5,6)}.
  CHECK(r.md_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("sentence mismatches are data errors") {
  Dataset gold = with_tags({tags_of({"O", "O"})});
  CHECK_THROWS_AS(evaluate(with_tags({tags_of({"O"})}), gold), DataError);
  CHECK_THROWS_AS(evaluate(Dataset{}, gold), DataError);
}

TEST_CASE("metric properties on random data") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Dataset gold = testing::random_dataset(rng, 20);
    Dataset pred = gold;
    for (auto& s : pred.sentences) s.tags = testing::random_bio(rng, s.size());
    EvalReport r = evaluate(pred, gold);

    // Permutation invariance.
    Dataset pg = gold, pp = pred;
    for (size_t i = pg.size(); i > 1; --i) {
      const size_t j = rng.below(i);
      std::swap(pg.sentences[i - 1], pg.sentences[j]);
      std::swap(pp.sentences[i - 1], pp.sentences[j]);
    }
    CHECK(evaluate(pp, pg).macro_f1 == doctest::Approx(r.macro_f1).epsilon(1e-15));

    size_t typed = 0;
    for (EntityType t : kAllTypes) typed += r.label(t).matched_count;
    CHECK(typed <= r.mention.matched_count);
    CHECK(r.macro_f1 >= 0.0);
    CHECK(r.macro_f1 <= 1.0);

    // Replacing one sentence's prediction by its gold never loses a match.
    Dataset better = pred;
    better.sentences[0].tags = gold.sentences[0].tags;
    EvalReport rb = evaluate(better, gold);
    for (EntityType t : kAllTypes) {
      CHECK(rb.label(t).matched_count >= r.label(t).matched_count);
    }
  }
}

TEST_CASE("adding a correctly predicted entity never lowers F1") {
  Dataset gold = with_tags({tags_of({"B-PER", "O", "B-LOC", "O", "B-PER"})});
  Dataset pred = with_tags({tags_of({"B-PER", "O", "O", "B-LOC", "O"})});
  EvalReport before = evaluate(pred, gold);
  pred.sentences[0].tags[4] = *parse_tag("B-PER");
  EvalReport after = evaluate(pred, gold);
  for (EntityType t : kAllTypes) CHECK(after.label(t).f1 >= before.label(t).f1);
}

TEST_CASE("report rendering") {
  Dataset gold = with_tags({tags_of({"B-PER", "O"})});
  EvalReport r = evaluate(gold, gold);
  const std::string table = report_table(r);
  CHECK(table.find("macro@F1   1.0000") != std::string::npos);
  CHECK(table.find("F1@CW") != std::string::npos);
  auto j = report_json(r);
  CHECK(j["macro_f1"] == 1.0);
  CHECK(j["per_label"]["PER"]["matched_count"] == 1);
}

}  // namespace
}  // namespace gain
