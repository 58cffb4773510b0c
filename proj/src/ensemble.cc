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

#include "gain/ensemble.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "gain/errors.h"
#include "gain/model.h"
#include "gain/rng.h"

namespace gain {

using nlohmann::json;
using num::Tensor;

std::vector<int> decode_tag_logits(const Tensor& logits) {
  if (logits.ndim() != 2 || logits.cols() != kNumTags) {
    throw ContractError("decode_tag_logits: expected 13 columns");
  }
  return repair_bio(argmax_rows(logits));
}

LogitDecoder span_logit_decoder(size_t max_width) {
  return [max_width](const Tensor& logits) {
    if (logits.ndim() != 2 || logits.cols() != 2 * kSpanClasses) {
      throw ContractError("span decoder: expected 14 columns");
    }
    return span_decode(argmax_rows(logits, 0, kSpanClasses),
                       argmax_rows(logits, kSpanClasses, 2 * kSpanClasses), max_width);
  };
}

Tensor average_logits(std::span<const Tensor> members) {
  if (members.empty()) throw ContractError("average_logits: no members");
  Tensor mean = members.front();
  for (size_t m = 1; m < members.size(); ++m) {
    if (!members[m].same_shape(mean)) {
      throw ContractError(fmt::format("average_logits: member {} has a different shape", m));
    }
    mean += members[m];
  }
  const double k = static_cast<double>(members.size());
  for (double& v : mean.values()) v /= k;
  return mean;
}

std::vector<int> avg_logits_decode(std::span<const Tensor> members, const LogitDecoder& decode) {
  return decode(average_logits(members));
}

std::vector<int> weighted_token_vote(std::span<const std::vector<int>> members,
                                     std::span<const double> weights) {
  if (members.empty()) throw ContractError("weighted_token_vote: no members");
  if (weights.size() != members.size()) {
    throw ContractError("weighted_token_vote: one weight per member required");
  }
  double total_weight = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("weighted_token_vote: weights must be >= 0");
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw ContractError("weighted_token_vote: all weights are zero");
  const size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) throw ContractError("weighted_token_vote: member lengths differ");
  }
  const double slack = 1e-12 * total_weight;
  std::vector<int> out(n);
  std::array<double, kNumTags> votes{};
  for (size_t i = 0; i < n; ++i) {
    votes.fill(0.0);
    for (size_t m = 0; m < members.size(); ++m) {
      const int tag = members[m][i];
      if (tag < 0 || tag >= kNumTags) throw ContractError("weighted_token_vote: bad tag index");
      votes[static_cast<size_t>(tag)] += weights[m];
    }
    const double best = *std::max_element(votes.begin(), votes.end());
    size_t winner = 0;
    while (votes[winner] < best - slack) ++winner;
    out[i] = static_cast<int>(winner);
  }
  return repair_bio(out);
}

FoldPlan kfold_split(const Dataset& data, size_t k, uint64_t seed) {
  if (k < 2) throw ConfigError(fmt::format("k-fold needs k >= 2, got {}", k));
  if (k > data.size()) {
    throw ConfigError(fmt::format("k-fold with k = {} exceeds {} sentences", k, data.size()));
  }
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<size_t>(order));
  FoldPlan plan;
  plan.seed = seed;
  const size_t base = data.size() / k, extra = data.size() % k;
  size_t pos = 0;
  for (size_t f = 0; f < k; ++f) {
    const size_t len = base + (f < extra ? 1 : 0);
    plan.folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                            order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return plan;
}

std::pair<Dataset, Dataset> fold_datasets(const Dataset& data, const FoldPlan& plan, size_t i) {
  if (i >= plan.folds.size()) throw ContractError("fold_datasets: fold index out of range");
  std::pair<Dataset, Dataset> out;
  out.first.name = fmt::format("{}-fold{}-train", data.name, i);
  out.second.name = fmt::format("{}-fold{}-val", data.name, i);
  for (size_t f = 0; f < plan.folds.size(); ++f) {
    Dataset& dst = f == i ? out.second : out.first;
    for (size_t idx : plan.folds[f]) dst.sentences.push_back(data.sentences.at(idx));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction files

std::string serialize_predictions(const PredictionSet& set) {
  std::string out;
  for (const auto& s : set.sentences) {
    json j = {{"tokens", s.tokens}, {"model_id", set.model_id}};
    if (set.weight != 1.0) j["weight"] = set.weight;
    if (s.logits.allocated()) {
      j["logits"] = std::vector<double>(s.logits.values().begin(), s.logits.values().end());
      if (set.span_logits) j["kind"] = "span";
    } else {
      std::vector<std::string> names;
      for (int t : s.tags) names.emplace_back(tag_name(t));
      j["tags"] = names;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

PredictionSet parse_predictions(std::string_view jsonl) {
  PredictionSet set;
  size_t line_no = 0;
  bool first = true;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      SentencePrediction s;
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      const std::string id = j.value("model_id", std::string());
      const bool span = j.value("kind", std::string("tag")) == "span";
      const double weight = j.value("weight", 1.0);
      if (first) {
        if (!(weight >= 0.0)) throw DataError("weight must be >= 0");
        set.model_id = id;
        set.span_logits = span;
        set.weight = weight;
        first = false;
      } else if (id != set.model_id || span != set.span_logits || weight != set.weight) {
        throw DataError("model_id, kind or weight changes within the file");
      }
      if (j.contains("logits")) {
        const auto flat = j.at("logits").get<std::vector<double>>();
        const size_t cols = span ? 2 * kSpanClasses : kNumTags;
        if (flat.size() != cols * s.tokens.size()) {
          throw DataError(fmt::format("expected {} logits, found {}", cols * s.tokens.size(),
                                      flat.size()));
        }
        s.logits = Tensor({s.tokens.size(), cols}, flat);
      } else {
        for (const auto& name : j.at("tags").get<std::vector<std::string>>()) {
          const auto tag = parse_tag(name);
          if (!tag) throw DataError(fmt::format("unknown tag '{}'", name));
          s.tags.push_back(*tag);
        }
        if (s.tags.size() != s.tokens.size()) throw DataError("tags and tokens differ in length");
      }
      set.sentences.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("prediction line {}: {}", line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("prediction line {}: {}", line_no, e.what()));
    }
  }
  return set;
}

PredictionSet load_predictions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(fmt::format("cannot read predictions '{}'", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_predictions(ss.str());
}

void save_predictions(const PredictionSet& set, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError(fmt::format("cannot write predictions '{}'", path));
  f << serialize_predictions(set);
}

void check_aligned(std::span<const PredictionSet> members) {
  if (members.empty()) throw ContractError("ensemble: no members");
  const auto& ref = members.front().sentences;
  for (size_t m = 1; m < members.size(); ++m) {
    const auto& other = members[m].sentences;
    if (other.size() != ref.size()) {
      throw DataError(fmt::format("member '{}' has {} sentences, expected {}",
                                  members[m].model_id, other.size(), ref.size()));
    }
    for (size_t i = 0; i < ref.size(); ++i) {
      if (other[i].tokens != ref[i].tokens) {
        throw DataError(fmt::format("member '{}' differs from the first at sentence {}",
                                    members[m].model_id, i));
      }
    }
  }
}

}  // namespace gain
