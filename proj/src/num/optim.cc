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

#include "gain/num/optim.h"

#include <fmt/format.h>

#include <cmath>

#include "gain/errors.h"

namespace gain::num {

double OptimizerConfig::rate(ParamGroup group) const {
  auto it = learning_rates.find(group);
  if (it == learning_rates.end()) {
    throw ConfigError(fmt::format("no learning rate for group '{}'", group_name(group)));
  }
  return it->second;
}

void OptimizerConfig::validate() const {
  for (const auto& [group, lr] : learning_rates) {
    if (!(lr > 0.0)) {
      throw ConfigError(fmt::format("learning rate for '{}' must be positive, got {}",
                                    group_name(group), lr));
    }
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0) || weight_decay < 0.0) {
    throw ConfigError("AdamW epsilon must be positive and weight decay non-negative");
  }
}

void adamw_step(ParamSet& params, const OptimizerConfig& config) {
  for (const auto& p : params) {
    if (p->trainable && !p->grad.allocated() && p->value.size() > 0) {
      throw ContractError(fmt::format("parameter '{}' has no gradient", p->name));
    }
  }
  for (const auto& holder : params) {
    Parameter& p = *holder;
    if (!p.trainable) continue;
    const double lr = config.rate(p.group);
    if (!p.adam_m.allocated()) {
      p.adam_m = zeros_like(p.value);
      p.adam_v = zeros_like(p.value);
    }
    ++p.step;
    const double step = static_cast<double>(p.step);
    const double correct1 = 1.0 - std::pow(config.beta1, step);
    const double correct2 = 1.0 - std::pow(config.beta2, step);
    const double decay = 1.0 - lr * config.weight_decay;
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.adam_m[i] = config.beta1 * p.adam_m[i] + (1.0 - config.beta1) * g;
      p.adam_v[i] = config.beta2 * p.adam_v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = p.adam_m[i] / correct1;
      const double v_hat = p.adam_v[i] / correct2;
      p.value[i] = p.value[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    p.grad = Tensor();
  }
}

}  // namespace gain::num
