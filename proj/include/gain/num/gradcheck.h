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

#ifndef GAIN_NUM_GRADCHECK_H_
#define GAIN_NUM_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gain/num/autodiff.h"
#include "gain/num/ops.h"
#include "gain/rng.h"

namespace gain::num {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  size_t coordinates = 0;
};

// Compares analytic gradients against central differences
// (f(x + h) - f(x - h)) / 2h on `samples` random coordinates drawn from
// every trainable parameter in `params` (all coordinates when a parameter
// has fewer). Relative error uses max(|analytic|, |numeric|, 1e-8) as the
// denominator. `loss_fn` must be deterministic. Stop-gradient outputs are
// held at their unperturbed values (see FrozenStopGradients), so the check
// targets the gradient the tape defines. Throws NumericError on NaN.
GradCheckResult grad_check(const std::function<Var()>& loss_fn,
                           std::span<Parameter* const> params, double h,
                           size_t samples, Rng& rng);

GradCheckResult grad_check(const std::function<Var()>& loss_fn, ParamSet& params,
                           double h, size_t samples, Rng& rng);

}  // namespace gain::num

#endif  // GAIN_NUM_GRADCHECK_H_
