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

#ifndef GAIN_NUM_OPTIM_H_
#define GAIN_NUM_OPTIM_H_

#include <map>

#include "gain/num/autodiff.h"

namespace gain::num {

struct OptimizerConfig {
  std::map<ParamGroup, double> learning_rates = {
      {ParamGroup::kEncoder, 1e-3},
      {ParamGroup::kGazetteerNet, 1e-3},
      {ParamGroup::kCrf, 1e-2},
      {ParamGroup::kOther, 1e-3},
  };
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  double rate(ParamGroup group) const;
  void validate() const;
};

// One AdamW step (decoupled weight decay) over every trainable parameter,
// then clears the gradients. Throws ContractError if a trainable parameter
// has no gradient.
void adamw_step(ParamSet& params, const OptimizerConfig& config);

}  // namespace gain::num

#endif  // GAIN_NUM_OPTIM_H_
