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

#ifndef GAIN_GRADSUITE_H_
#define GAIN_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gain/model.h"
#include "gain/num/gradcheck.h"

namespace gain {

struct GradSuiteEntry {
  std::string name;
  num::GradCheckResult result;
};

// Every differentiable op in isolation, including the fused LSTM, the CRF
// likelihood and the pairwise KL, each scalarised with fixed random weights.
std::vector<GradSuiteEntry> op_gradient_suite(double h, uint64_t seed);

// Full stage-2 loss L3 = alpha * L1 + L2 on a two-sentence batch of the
// synthetic task, one entry per classifier (weighted-sum integration, so
// lambda is covered), at the classifier's default alpha. Parameters are
// redrawn uniformly in [-1, 1].
std::vector<GradSuiteEntry> stage2_gradient_suite(double h, uint64_t seed);

}  // namespace gain

#endif  // GAIN_GRADSUITE_H_
