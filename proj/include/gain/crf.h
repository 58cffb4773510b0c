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

#ifndef GAIN_CRF_H_
#define GAIN_CRF_H_

#include <span>
#include <vector>

#include "gain/num/autodiff.h"
#include "gain/num/tensor.h"

namespace gain {

// Score tables of a linear-chain CRF over T tags.
struct CrfScores {
  const num::Tensor& emissions;    // [n, T]
  const num::Tensor& transitions;  // [T, T], row = previous tag
  const num::Tensor& start;        // [T]
  const num::Tensor& end;          // [T]
};

// Unnormalised path score of `tags`.
double crf_path_score(const CrfScores& s, std::span<const int> tags);

// log of the sum of exp(path score) over all T^n paths (forward algorithm).
double crf_log_partition(const CrfScores& s);

// Highest-scoring path. Backpointers prefer the lowest tag index on ties,
// as does the final argmax.
std::vector<int> crf_viterbi(const CrfScores& s);

// Negative log-likelihood logZ - score(gold) as a differentiable scalar.
// Gradients are marginals minus gold indicators (forward-backward).
num::Var crf_nll(const num::Var& emissions, const num::Var& transitions,
                 const num::Var& start, const num::Var& end,
                 std::span<const int> gold);

}  // namespace gain

#endif  // GAIN_CRF_H_
