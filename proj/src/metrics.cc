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

#include "gain/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <set>

#include "gain/errors.h"

namespace gain {

namespace {

double ratio(size_t num, size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void finish(LabelScore& s) {
  s.precision = ratio(s.matched_count, s.pred_count);
  s.recall = ratio(s.matched_count, s.gold_count);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
}

nlohmann::json score_json(const LabelScore& s) {
  return {{"precision", s.precision},   {"recall", s.recall},
          {"f1", s.f1},                 {"gold_count", s.gold_count},
          {"pred_count", s.pred_count}, {"matched_count", s.matched_count}};
}

}  // namespace

EvalReport evaluate(std::span<const std::vector<int>> pred, const Dataset& gold) {
  if (pred.size() != gold.size()) {
    throw DataError(fmt::format("evaluate: {} predicted sentences for {} gold", pred.size(),
                                gold.size()));
  }
  EvalReport r;
  for (size_t i = 0; i < pred.size(); ++i) {
    const auto& g = gold.sentences[i].tags;
    if (pred[i].size() != g.size()) {
      throw DataError(fmt::format("evaluate: sentence {} has {} predicted tags for {} tokens",
                                  i, pred[i].size(), g.size()));
    }
    const auto gs = entity_spans(g);
    const auto ps = entity_spans(pred[i]);
    std::set<std::pair<size_t, size_t>> gold_mentions;
    for (const auto& s : gs) {
      ++r.per_label[static_cast<size_t>(type_index(s.type))].gold_count;
      gold_mentions.insert({s.start, s.end});
    }
    std::set<std::pair<size_t, size_t>> pred_mentions;
    for (const auto& s : ps) {
      auto& score = r.per_label[static_cast<size_t>(type_index(s.type))];
      ++score.pred_count;
      if (std::find(gs.begin(), gs.end(), s) != gs.end()) ++score.matched_count;
      pred_mentions.insert({s.start, s.end});
    }
    r.mention.gold_count += gold_mentions.size();
    r.mention.pred_count += pred_mentions.size();
    for (const auto& m : pred_mentions) r.mention.matched_count += gold_mentions.count(m);
  }

  size_t present = 0;
  for (EntityType t : kAllTypes) {
    auto& s = r.per_label[static_cast<size_t>(type_index(t))];
    finish(s);
    if (!r.in_macro(t)) continue;
    ++present;
    r.macro_f1 += s.f1;
    r.macro_p += s.precision;
    r.macro_r += s.recall;
  }
  if (present > 0) {
    r.macro_f1 /= static_cast<double>(present);
    r.macro_p /= static_cast<double>(present);
    r.macro_r /= static_cast<double>(present);
  }
  finish(r.mention);
  r.md_f1 = r.mention.f1;
  return r;
}

EvalReport evaluate(const Dataset& pred, const Dataset& gold) {
  std::vector<std::vector<int>> tags;
  tags.reserve(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    if (i < gold.size() && pred.sentences[i].tokens != gold.sentences[i].tokens) {
      throw DataError(fmt::format("evaluate: sentence {} tokens differ from gold", i));
    }
    tags.push_back(pred.sentences[i].tags);
  }
  return evaluate(tags, gold);
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json labels = nlohmann::json::object();
  for (EntityType t : kAllTypes) {
    nlohmann::json s = score_json(report.label(t));
    s["in_macro"] = report.in_macro(t);
    labels[std::string(type_name(t))] = std::move(s);
  }
  return {{"macro_f1", report.macro_f1}, {"macro_p", report.macro_p},
          {"macro_r", report.macro_r},   {"md_f1", report.md_f1},
          {"mention", score_json(report.mention)}, {"per_label", std::move(labels)}};
}

std::string report_table(const EvalReport& report) {
  std::string out;
  const auto row = [&out](std::string_view name, double v) {
    out += fmt::format("{:<10} {:.4f}\n", name, v);
  };
  row("macro@F1", report.macro_f1);
  row("macro@P", report.macro_p);
  row("macro@R", report.macro_r);
  row("MD@F1", report.md_f1);
  for (EntityType t : kAllTypes) row(fmt::format("F1@{}", type_name(t)), report.label(t).f1);
  return out;
}

}  // namespace gain
