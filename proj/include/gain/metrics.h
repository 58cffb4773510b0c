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

#ifndef GAIN_METRICS_H_
#define GAIN_METRICS_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gain/corpus.h"
#include "gain/tags.h"

namespace gain {

struct LabelScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t gold_count = 0;
  size_t pred_count = 0;
  size_t matched_count = 0;
};

struct EvalReport {
  std::array<LabelScore, kNumTypes> per_label;  // canonical type order
  double macro_f1 = 0.0;
  double macro_p = 0.0;
  double macro_r = 0.0;
  double md_f1 = 0.0;
  // Type-agnostic (start, end) counts behind md_f1.
  LabelScore mention;

  const LabelScore& label(EntityType t) const {
    return per_label[static_cast<size_t>(type_index(t))];
  }
  // A label enters the macro means iff it occurs in gold or predictions.
  bool in_macro(EntityType t) const {
    return label(t).gold_count > 0 || label(t).pred_count > 0;
  }
};

// Exact-match entity scoring. Sentences are paired by position and must
// have equal lengths; otherwise DataError.
EvalReport evaluate(const Dataset& pred, const Dataset& gold);
EvalReport evaluate(std::span<const std::vector<int>> pred, const Dataset& gold);

nlohmann::json report_json(const EvalReport& report);
// Aligned rows: macro@F1, macro@P, macro@R, MD@F1, F1@<label>.
std::string report_table(const EvalReport& report);

}  // namespace gain

#endif  // GAIN_METRICS_H_
