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

#include "gain/num/gradcheck.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "gain/errors.h"

namespace gain::num {

namespace {

double evaluate(const std::function<Var()>& loss_fn, FrozenStopGradients& freeze) {
  freeze.replay();
  const double v = loss_fn().item();
  if (std::isnan(v)) throw NumericError("grad_check: loss is NaN");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var()>& loss_fn,
                           std::span<Parameter* const> params, double h,
                           size_t samples, Rng& rng) {
  for (Parameter* p : params) p->grad = Tensor();
  FrozenStopGradients freeze;
  Var loss = loss_fn();
  if (std::isnan(loss.item())) throw NumericError("grad_check: loss is NaN");
  backward(loss);

  GradCheckResult result;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    const Tensor analytic =
        p->grad.allocated() ? p->grad : zeros_like(p->value);
    std::vector<size_t> coords(p->value.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > samples) {
      rng.shuffle(std::span<size_t>(coords));
      coords.resize(samples);
      std::sort(coords.begin(), coords.end());
    }
    for (size_t i : coords) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double plus = evaluate(loss_fn, freeze);
      p->value[i] = saved - h;
      const double minus = evaluate(loss_fn, freeze);
      p->value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  for (Parameter* p : params) p->grad = Tensor();
  return result;
}

GradCheckResult grad_check(const std::function<Var()>& loss_fn, ParamSet& params,
                           double h, size_t samples, Rng& rng) {
  std::vector<Parameter*> ptrs;
  for (const auto& p : params) ptrs.push_back(p.get());
  return grad_check(loss_fn, ptrs, h, samples, rng);
}

}  // namespace gain::num
