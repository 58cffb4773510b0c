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

#ifndef GAIN_ENSEMBLE_H_
#define GAIN_ENSEMBLE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gain/corpus.h"
#include "gain/num/tensor.h"

namespace gain {

using LogitDecoder = std::function<std::vector<int>(const num::Tensor&)>;

// Argmax per token over 13 tag logits, then BIO repair.
std::vector<int> decode_tag_logits(const num::Tensor& logits);
// Span pairing over 14 columns (7 start classes | 7 end classes).
LogitDecoder span_logit_decoder(size_t max_width);

// Elementwise mean of equally shaped logit matrices.
num::Tensor average_logits(std::span<const num::Tensor> members);
std::vector<int> avg_logits_decode(std::span<const num::Tensor> members,
                                   const LogitDecoder& decode);

// Per token, the tag with the largest summed member weight wins. Totals
// within 1e-12 of the total weight count as tied, and ties go to the lowest
// tag index, so rescaling all weights cannot flip a decision through
// rounding. The result is BIO-repaired.
std::vector<int> weighted_token_vote(std::span<const std::vector<int>> members,
                                     std::span<const double> weights);

struct FoldPlan {
  std::vector<std::vector<size_t>> folds;  // sentence indices
  uint64_t seed = 0;
};

// Seeded shuffle of sentence indices, then a contiguous partition into k
// folds whose sizes differ by at most one.
FoldPlan kfold_split(const Dataset& data, size_t k, uint64_t seed);

// (train, val) for fold i: val is fold i, train is every other fold.
std::pair<Dataset, Dataset> fold_datasets(const Dataset& data, const FoldPlan& plan, size_t i);

// One sentence of a prediction file: either decoded tags or logits.
struct SentencePrediction {
  std::vector<std::string> tokens;
  std::vector<int> tags;  // empty when logits are given
  num::Tensor logits;     // unallocated when tags are given
};

// Members of an ensemble exchange predictions as JSON lines, one object per
// sentence: {"tokens": [...], "tags": [...] | "logits": [row-major],
// "model_id": "..."} plus "kind": "span" for 14-column span logits and an
// optional vote "weight" (default 1).
struct PredictionSet {
  std::string model_id;
  double weight = 1.0;
  bool span_logits = false;
  std::vector<SentencePrediction> sentences;
};

std::string serialize_predictions(const PredictionSet& set);
PredictionSet parse_predictions(std::string_view jsonl);
PredictionSet load_predictions(const std::string& path);
void save_predictions(const PredictionSet& set, const std::string& path);

// Checks that members cover the same sentences (same tokens, same order).
void check_aligned(std::span<const PredictionSet> members);

}  // namespace gain

#endif  // GAIN_ENSEMBLE_H_
