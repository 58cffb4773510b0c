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

#ifndef GAIN_NUM_OPS_H_
#define GAIN_NUM_OPS_H_

#include <span>
#include <utility>
#include <vector>

#include "gain/num/autodiff.h"
#include "gain/rng.h"

namespace gain::num {

// Matrix product of [n, k] and [k, m].
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
// Adds a length-m vector to every row of an [n, m] matrix.
Var add_row(const Var& a, const Var& v);
// Multiplies every row of an [n, m] matrix elementwise by a length-m vector.
Var mul_row(const Var& a, const Var& v);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

// Inverted dropout when `training`; identity otherwise.
Var dropout(const Var& a, double rate, Rng& rng, bool training);

Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, size_t begin, size_t end);
// Stacks [1, m] (or length-m) rows into an [n, m] matrix.
Var stack_rows(std::span<const Var> rows);

// Rows of a [V, E] table selected by ids.
Var embedding(const Var& table, std::span<const int> ids);

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

// Identity forward; blocks gradient flow.
Var stop_gradient(const Var& a);

// While alive, the first pass through stop_gradient records its outputs in
// call order; after replay(), the k-th call returns the k-th recorded value
// instead of its input. Finite differences taken under replay measure the
// gradient the tape defines, with stopped branches held fixed. One scope
// per thread at a time.
class FrozenStopGradients {
 public:
  FrozenStopGradients();
  ~FrozenStopGradients();
  FrozenStopGradients(const FrozenStopGradients&) = delete;
  FrozenStopGradients& operator=(const FrozenStopGradients&) = delete;

  // Switches to replay mode and rewinds to the first recorded value.
  void replay();
  size_t recorded() const { return values_.size(); }

 private:
  friend Var stop_gradient(const Var& a);
  std::vector<Tensor> values_;
  size_t cursor_ = 0;
  bool replaying_ = false;
};

// Mean over rows of -log softmax(logits)[row, target].
Var cross_entropy(const Var& logits, std::span<const int> targets);

// Mean over rows of KL(softmax(target_logits) || softmax(logits)). Both
// arguments receive their true gradient.
Var kl_divergence(const Var& target_logits, const Var& logits);

// Symmetric adaptation loss with stop-gradient on each target:
//   KL(sg(p) || q) + KL(sg(q) || p),  p = softmax(a), q = softmax(b)
// averaged over rows. `a` is trained only by the second term, `b` only by
// the first.
Var kl_pair_loss(const Var& a_logits, const Var& b_logits);

// mean((a - b)^2) over all elements.
Var mse_loss(const Var& a, const Var& b);

struct LstmWeights {
  Var input_weights;      // [in, 4h], gate blocks i, f, g, o
  Var recurrent_weights;  // [h, 4h]
  Var bias;               // [4h]
};

// One LSTM step; x is [1, in], h and c are [1, hidden].
std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c,
                              const LstmWeights& w);

// Whole-sequence LSTM over the rows of x ([n, in] -> [n, hidden]) with a
// hand-written backward pass. `reverse` scans from the last row; output row
// t is always the state at input position t.
Var lstm_sequence(const Var& x, const LstmWeights& w, bool reverse);

// Row t = concat(forward state at t, backward state at t).
Var bilstm(const Var& x, const LstmWeights& forward, const LstmWeights& backward);

}  // namespace gain::num

#endif  // GAIN_NUM_OPS_H_
