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

#include "gain/num/ops.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "gain/errors.h"

namespace gain::num {

namespace {

void require(bool ok, std::string_view what) {
  if (!ok) throw ContractError(std::string(what));
}

std::string shape_str(const Tensor& t) {
  return fmt::format("[{}]", fmt::join(t.shape(), ","));
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (!a.same_shape(b)) {
    throw ContractError(fmt::format("{}: shape mismatch {} vs {}", op,
                                    shape_str(a), shape_str(b)));
  }
}

void require_matrix(const Tensor& t, std::string_view op) {
  if (t.ndim() != 2) {
    throw ContractError(fmt::format("{}: expected a matrix, got {}", op, shape_str(t)));
  }
}

// c[n, m] += a[n, k] * b[k, m]
void gemm_nn(const double* a, const double* b, double* c, size_t n, size_t k,
             size_t m) {
  for (size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[n, k] += a[n, m] * b[k, m]^T
void gemm_nt(const double* a, const double* b, double* c, size_t n, size_t m,
             size_t k) {
  for (size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    double* ci = c + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double* bp = b + p * m;
      double s = 0.0;
      for (size_t j = 0; j < m; ++j) s += ai[j] * bp[j];
      ci[p] += s;
    }
  }
}

// c[k, m] += a[n, k]^T * b[n, m]
void gemm_tn(const double* a, const double* b, double* c, size_t n, size_t k,
             size_t m) {
  for (size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rowwise log-softmax of t.
Tensor log_softmax_tensor(const Tensor& t) {
  Tensor out(t.shape());
  const size_t cols = t.cols();
  for (size_t r = 0; r < t.rows(); ++r) {
    auto in = t.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (size_t c = 0; c < cols; ++c) s += std::exp(in[c] - mx);
    const double lse = mx + std::log(s);
    for (size_t c = 0; c < cols; ++c) o[c] = in[c] - lse;
  }
  return out;
}

Tensor exp_tensor(const Tensor& t) {
  Tensor out(t.shape());
  for (size_t i = 0; i < t.size(); ++i) out[i] = std::exp(t[i]);
  return out;
}

bool wants_grad(const Node& n, size_t i) { return n.inputs[i]->requires_grad; }

template <typename F>
Var unary(const Var& a, F forward_fn, auto derivative_fn) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (size_t i = 0; i < x.size(); ++i) y[i] = forward_fn(x[i]);
  Tensor y_copy = y;
  return make_op(std::move(y), {a}, [y = std::move(y_copy), derivative_fn](Node& n) {
    Tensor& gx = n.inputs[0]->grad_buffer();
    const Tensor& x = n.inputs[0]->val();
    for (size_t i = 0; i < gx.size(); ++i) {
      gx[i] += n.grad[i] * derivative_fn(x[i], y[i]);
    }
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  require_matrix(x, "matmul");
  require_matrix(w, "matmul");
  const size_t n = x.shape()[0], k = x.shape()[1], m = w.shape()[1];
  if (w.shape()[0] != k) {
    throw ContractError(fmt::format("matmul: inner dimensions differ, {} x {}",
                                    shape_str(x), shape_str(w)));
  }
  Tensor y = Tensor::matrix(n, m);
  gemm_nn(x.data(), w.data(), y.data(), n, k, m);
  return make_op(std::move(y), {a, b}, [n, k, m](Node& node) {
    const Tensor& x = node.inputs[0]->val();
    const Tensor& w = node.inputs[1]->val();
    if (wants_grad(node, 0)) {
      gemm_nt(node.grad.data(), w.data(), node.inputs[0]->grad_buffer().data(), n, m, k);
    }
    if (wants_grad(node, 1)) {
      gemm_tn(x.data(), node.grad.data(), node.inputs[1]->grad_buffer().data(), n, k, m);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor y = a.value();
  y += b.value();
  return make_op(std::move(y), {a, b}, [](Node& n) {
    if (wants_grad(n, 0)) n.inputs[0]->grad_buffer() += n.grad;
    if (wants_grad(n, 1)) n.inputs[1]->grad_buffer() += n.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y = a.value();
  for (size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return make_op(std::move(y), {a, b}, [](Node& n) {
    if (wants_grad(n, 0)) n.inputs[0]->grad_buffer() += n.grad;
    if (wants_grad(n, 1)) {
      Tensor& g = n.inputs[1]->grad_buffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y = a.value();
  for (size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return make_op(std::move(y), {a, b}, [](Node& n) {
    const Tensor& x0 = n.inputs[0]->val();
    const Tensor& x1 = n.inputs[1]->val();
    if (wants_grad(n, 0)) {
      Tensor& g = n.inputs[0]->grad_buffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * x1[i];
    }
    if (wants_grad(n, 1)) {
      Tensor& g = n.inputs[1]->grad_buffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * x0[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor y = a.value();
  for (double& v : y.values()) v *= factor;
  return make_op(std::move(y), {a}, [factor](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    for (size_t i = 0; i < g.size(); ++i) g[i] += factor * n.grad[i];
  });
}

Var add_row(const Var& a, const Var& v) {
  const Tensor& x = a.value();
  require_matrix(x, "add_row");
  require(v.value().size() == x.cols(), "add_row: vector length must equal columns");
  Tensor y = x;
  const size_t m = x.cols();
  for (size_t r = 0; r < x.rows(); ++r) {
    for (size_t c = 0; c < m; ++c) y.at(r, c) += v.value()[c];
  }
  return make_op(std::move(y), {a, v}, [m](Node& n) {
    if (wants_grad(n, 0)) n.inputs[0]->grad_buffer() += n.grad;
    if (wants_grad(n, 1)) {
      Tensor& g = n.inputs[1]->grad_buffer();
      for (size_t r = 0; r < n.grad.rows(); ++r) {
        for (size_t c = 0; c < m; ++c) g[c] += n.grad.at(r, c);
      }
    }
  });
}

Var mul_row(const Var& a, const Var& v) {
  const Tensor& x = a.value();
  require_matrix(x, "mul_row");
  require(v.value().size() == x.cols(), "mul_row: vector length must equal columns");
  Tensor y = x;
  const size_t m = x.cols();
  for (size_t r = 0; r < x.rows(); ++r) {
    for (size_t c = 0; c < m; ++c) y.at(r, c) *= v.value()[c];
  }
  return make_op(std::move(y), {a, v}, [m](Node& n) {
    const Tensor& x = n.inputs[0]->val();
    const Tensor& w = n.inputs[1]->val();
    if (wants_grad(n, 0)) {
      Tensor& g = n.inputs[0]->grad_buffer();
      for (size_t r = 0; r < x.rows(); ++r) {
        for (size_t c = 0; c < m; ++c) g.at(r, c) += n.grad.at(r, c) * w[c];
      }
    }
    if (wants_grad(n, 1)) {
      Tensor& g = n.inputs[1]->grad_buffer();
      for (size_t r = 0; r < x.rows(); ++r) {
        for (size_t c = 0; c < m; ++c) g[c] += n.grad.at(r, c) * x.at(r, c);
      }
    }
  });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var dropout(const Var& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  require(rate < 1.0, "dropout: rate must be below 1");
  const Tensor& x = a.value();
  Tensor mask(x.shape());
  const double keep = 1.0 - rate;
  for (double& m : mask.values()) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Tensor y = x;
  for (size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return make_op(std::move(y), {a}, [mask = std::move(mask)](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * mask[i];
  });
}

Var concat_cols(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  require_matrix(x, "concat_cols");
  require_matrix(z, "concat_cols");
  require(x.rows() == z.rows(), "concat_cols: row counts differ");
  const size_t ca = x.cols(), cb = z.cols(), n = x.rows();
  Tensor y = Tensor::matrix(n, ca + cb);
  for (size_t r = 0; r < n; ++r) {
    std::copy_n(x.row(r).data(), ca, y.row(r).data());
    std::copy_n(z.row(r).data(), cb, y.row(r).data() + ca);
  }
  return make_op(std::move(y), {a, b}, [ca, cb, n](Node& node) {
    if (wants_grad(node, 0)) {
      Tensor& g = node.inputs[0]->grad_buffer();
      for (size_t r = 0; r < n; ++r) {
        for (size_t c = 0; c < ca; ++c) g.at(r, c) += node.grad.at(r, c);
      }
    }
    if (wants_grad(node, 1)) {
      Tensor& g = node.inputs[1]->grad_buffer();
      for (size_t r = 0; r < n; ++r) {
        for (size_t c = 0; c < cb; ++c) g.at(r, c) += node.grad.at(r, ca + c);
      }
    }
  });
}

Var slice_cols(const Var& a, size_t begin, size_t end) {
  const Tensor& x = a.value();
  require_matrix(x, "slice_cols");
  require(begin < end && end <= x.cols(), "slice_cols: bad column range");
  const size_t n = x.rows(), w = end - begin;
  Tensor y = Tensor::matrix(n, w);
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < w; ++c) y.at(r, c) = x.at(r, begin + c);
  }
  return make_op(std::move(y), {a}, [begin, w, n](Node& node) {
    Tensor& g = node.inputs[0]->grad_buffer();
    for (size_t r = 0; r < n; ++r) {
      for (size_t c = 0; c < w; ++c) g.at(r, begin + c) += node.grad.at(r, c);
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  require(!rows.empty(), "stack_rows: no rows");
  const size_t m = rows.front().value().size();
  Tensor y = Tensor::matrix(rows.size(), m);
  for (size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].value().size() == m, "stack_rows: row widths differ");
    std::copy_n(rows[r].value().data(), m, y.row(r).data());
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return make_op(std::move(y), std::move(inputs), [m](Node& node) {
    for (size_t r = 0; r < node.inputs.size(); ++r) {
      if (!wants_grad(node, r)) continue;
      Tensor& g = node.inputs[r]->grad_buffer();
      for (size_t c = 0; c < m; ++c) g[c] += node.grad.at(r, c);
    }
  });
}

Var embedding(const Var& table, std::span<const int> ids) {
  const Tensor& t = table.value();
  require_matrix(t, "embedding");
  const size_t e = t.cols();
  Tensor y = Tensor::matrix(ids.size(), e);
  for (size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && static_cast<size_t>(ids[r]) < t.rows(),
            "embedding: id out of range");
    std::copy_n(t.row(static_cast<size_t>(ids[r])).data(), e, y.row(r).data());
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return make_op(std::move(y), {table}, [idv = std::move(idv), e](Node& node) {
    Tensor& g = node.inputs[0]->grad_buffer();
    for (size_t r = 0; r < idv.size(); ++r) {
      double* dst = g.row(static_cast<size_t>(idv[r])).data();
      for (size_t c = 0; c < e; ++c) dst[c] += node.grad.at(r, c);
    }
  });
}

Var softmax_rows(const Var& a) {
  Tensor s = exp_tensor(log_softmax_tensor(a.value()));
  Tensor s_copy = s;
  return make_op(std::move(s), {a}, [s = std::move(s_copy)](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    for (size_t r = 0; r < s.rows(); ++r) {
      auto sr = s.row(r);
      auto gr = n.grad.row(r);
      double dot = 0.0;
      for (size_t c = 0; c < sr.size(); ++c) dot += gr[c] * sr[c];
      for (size_t c = 0; c < sr.size(); ++c) g.at(r, c) += sr[c] * (gr[c] - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  Tensor y = log_softmax_tensor(a.value());
  Tensor s = exp_tensor(y);
  return make_op(std::move(y), {a}, [s = std::move(s)](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    for (size_t r = 0; r < s.rows(); ++r) {
      auto gr = n.grad.row(r);
      double total = 0.0;
      for (double v : gr) total += v;
      for (size_t c = 0; c < gr.size(); ++c) g.at(r, c) += gr[c] - s.at(r, c) * total;
    }
  });
}

Var sum(const Var& a) {
  return make_op(Tensor::scalar(a.value().sum()), {a}, [](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    const double up = n.grad[0];
    for (double& v : g.values()) v += up;
  });
}

Var mean(const Var& a) {
  const double count = static_cast<double>(a.value().size());
  return make_op(Tensor::scalar(a.value().sum() / count), {a}, [count](Node& n) {
    Tensor& g = n.inputs[0]->grad_buffer();
    const double up = n.grad[0] / count;
    for (double& v : g.values()) v += up;
  });
}

namespace {
thread_local FrozenStopGradients* active_freeze = nullptr;
}  // namespace

FrozenStopGradients::FrozenStopGradients() {
  require(active_freeze == nullptr, "FrozenStopGradients: scopes cannot nest");
  active_freeze = this;
}

FrozenStopGradients::~FrozenStopGradients() { active_freeze = nullptr; }

void FrozenStopGradients::replay() {
  replaying_ = true;
  cursor_ = 0;
}

Var stop_gradient(const Var& a) {
  FrozenStopGradients* f = active_freeze;
  if (f == nullptr) return Var::constant(a.value());
  if (!f->replaying_) {
    f->values_.push_back(a.value());
    return Var::constant(a.value());
  }
  require(f->cursor_ < f->values_.size() &&
              f->values_[f->cursor_].same_shape(a.value()),
          "stop_gradient: replay does not follow the recorded graph");
  return Var::constant(f->values_[f->cursor_++]);
}

Var cross_entropy(const Var& logits, std::span<const int> targets) {
  const Tensor& x = logits.value();
  require_matrix(x, "cross_entropy");
  require(targets.size() == x.rows(), "cross_entropy: one target per row");
  require(x.rows() > 0, "cross_entropy: no rows");
  const size_t n = x.rows(), k = x.cols();
  Tensor lp = log_softmax_tensor(x);
  double loss = 0.0;
  for (size_t r = 0; r < n; ++r) {
    require(targets[r] >= 0 && static_cast<size_t>(targets[r]) < k,
            "cross_entropy: target out of range");
    loss -= lp.at(r, static_cast<size_t>(targets[r]));
  }
  loss /= static_cast<double>(n);
  std::vector<int> t(targets.begin(), targets.end());
  return make_op(Tensor::scalar(loss), {logits},
                 [p = exp_tensor(lp), t = std::move(t), n, k](Node& node) {
                   Tensor& g = node.inputs[0]->grad_buffer();
                   const double up = node.grad[0] / static_cast<double>(n);
                   for (size_t r = 0; r < n; ++r) {
                     for (size_t c = 0; c < k; ++c) {
                       const double target = static_cast<int>(c) == t[r] ? 1.0 : 0.0;
                       g.at(r, c) += up * (p.at(r, c) - target);
                     }
                   }
                 });
}

Var kl_divergence(const Var& target_logits, const Var& logits) {
  const Tensor& t = target_logits.value();
  const Tensor& l = logits.value();
  require_same_shape(t, l, "kl_divergence");
  require_matrix(t, "kl_divergence");
  require(t.rows() > 0, "kl_divergence: no rows");
  const size_t n = t.rows(), k = t.cols();
  Tensor lp = log_softmax_tensor(t);
  Tensor lq = log_softmax_tensor(l);
  Tensor p = exp_tensor(lp);
  double loss = 0.0;
  for (size_t i = 0; i < p.size(); ++i) loss += p[i] * (lp[i] - lq[i]);
  loss /= static_cast<double>(n);
  return make_op(
      Tensor::scalar(loss), {target_logits, logits},
      [lp = std::move(lp), lq = std::move(lq), p = std::move(p), n, k](Node& node) {
        const double up = node.grad[0] / static_cast<double>(n);
        if (wants_grad(node, 0)) {
          Tensor& g = node.inputs[0]->grad_buffer();
          for (size_t r = 0; r < n; ++r) {
            double expect = 0.0;
            for (size_t c = 0; c < k; ++c) {
              expect += p.at(r, c) * (lp.at(r, c) - lq.at(r, c));
            }
            for (size_t c = 0; c < k; ++c) {
              g.at(r, c) +=
                  up * p.at(r, c) * (lp.at(r, c) - lq.at(r, c) - expect);
            }
          }
        }
        if (wants_grad(node, 1)) {
          Tensor& g = node.inputs[1]->grad_buffer();
          for (size_t i = 0; i < g.size(); ++i) {
            g[i] += up * (std::exp(lq[i]) - p[i]);
          }
        }
      });
}

Var kl_pair_loss(const Var& a_logits, const Var& b_logits) {
  require_same_shape(a_logits.value(), b_logits.value(), "kl_pair_loss");
  return add(kl_divergence(stop_gradient(a_logits), b_logits),
             kl_divergence(stop_gradient(b_logits), a_logits));
}

Var mse_loss(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mse_loss");
  return mean(mul(sub(a, b), sub(a, b)));
}

std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c,
                              const LstmWeights& w) {
  const size_t hidden = w.recurrent_weights.value().shape()[0];
  Var z = add_row(add(matmul(x, w.input_weights), matmul(h, w.recurrent_weights)),
                  w.bias);
  Var in_gate = sigmoid(slice_cols(z, 0, hidden));
  Var forget_gate = sigmoid(slice_cols(z, hidden, 2 * hidden));
  Var candidate = tanh(slice_cols(z, 2 * hidden, 3 * hidden));
  Var out_gate = sigmoid(slice_cols(z, 3 * hidden, 4 * hidden));
  Var c_next = add(mul(forget_gate, c), mul(in_gate, candidate));
  Var h_next = mul(out_gate, tanh(c_next));
  return {h_next, c_next};
}

Var lstm_sequence(const Var& x, const LstmWeights& w, bool reverse) {
  const Tensor& xs = x.value();
  const Tensor& wx = w.input_weights.value();
  const Tensor& wh = w.recurrent_weights.value();
  const Tensor& bias = w.bias.value();
  require_matrix(xs, "lstm_sequence");
  require_matrix(wx, "lstm_sequence");
  require_matrix(wh, "lstm_sequence");
  const size_t n = xs.rows(), in = xs.cols(), hidden = wh.shape()[0];
  const size_t g4 = 4 * hidden;
  if (wx.shape()[0] != in || wx.shape()[1] != g4 || wh.shape()[1] != g4 ||
      bias.size() != g4) {
    throw ContractError(fmt::format(
        "lstm_sequence: input {} incompatible with weights {} / {} / {}",
        shape_str(xs), shape_str(wx), shape_str(wh), shape_str(bias)));
  }

  // gates holds activated i, f, g, o per position.
  Tensor gates = Tensor::matrix(n, g4);
  gemm_nn(xs.data(), wx.data(), gates.data(), n, in, g4);
  Tensor cells = Tensor::matrix(n, hidden);
  Tensor tanh_cells = Tensor::matrix(n, hidden);
  Tensor hs = Tensor::matrix(n, hidden);

  for (size_t s = 0; s < n; ++s) {
    const size_t t = reverse ? n - 1 - s : s;
    double* z = gates.row(t).data();
    for (size_t j = 0; j < g4; ++j) z[j] += bias[j];
    if (s > 0) {
      const size_t prev = reverse ? t + 1 : t - 1;
      gemm_nn(hs.row(prev).data(), wh.data(), z, 1, hidden, g4);
    }
    for (size_t j = 0; j < hidden; ++j) {
      const double ig = sigmoid_scalar(z[j]);
      const double fg = sigmoid_scalar(z[hidden + j]);
      const double cg = std::tanh(z[2 * hidden + j]);
      const double og = sigmoid_scalar(z[3 * hidden + j]);
      z[j] = ig;
      z[hidden + j] = fg;
      z[2 * hidden + j] = cg;
      z[3 * hidden + j] = og;
      double c_prev = 0.0;
      if (s > 0) c_prev = cells.at(reverse ? t + 1 : t - 1, j);
      const double c = fg * c_prev + ig * cg;
      cells.at(t, j) = c;
      tanh_cells.at(t, j) = std::tanh(c);
      hs.at(t, j) = og * tanh_cells.at(t, j);
    }
  }

  Tensor out = hs;
  return make_op(
      std::move(out), {x, w.input_weights, w.recurrent_weights, w.bias},
      [gates = std::move(gates), cells = std::move(cells),
       tanh_cells = std::move(tanh_cells), hs = std::move(hs), n, in, hidden, g4,
       reverse](Node& node) {
        const Tensor& xs = node.inputs[0]->val();
        const Tensor& wx = node.inputs[1]->val();
        const Tensor& wh = node.inputs[2]->val();
        Tensor dz = Tensor::matrix(n, g4);
        std::vector<double> dh_next(hidden, 0.0), dc_next(hidden, 0.0);
        for (size_t s = n; s-- > 0;) {
          const size_t t = reverse ? n - 1 - s : s;
          const bool has_prev = s > 0;
          const size_t prev = reverse ? t + 1 : t - 1;
          const double* gt = gates.row(t).data();
          double* dzt = dz.row(t).data();
          for (size_t j = 0; j < hidden; ++j) {
            const double ig = gt[j], fg = gt[hidden + j], cg = gt[2 * hidden + j],
                         og = gt[3 * hidden + j];
            const double tc = tanh_cells.at(t, j);
            const double dh = node.grad.at(t, j) + dh_next[j];
            const double d_out = dh * tc;
            const double dc = dh * og * (1.0 - tc * tc) + dc_next[j];
            const double c_prev = has_prev ? cells.at(prev, j) : 0.0;
            dzt[j] = dc * cg * ig * (1.0 - ig);
            dzt[hidden + j] = dc * c_prev * fg * (1.0 - fg);
            dzt[2 * hidden + j] = dc * ig * (1.0 - cg * cg);
            dzt[3 * hidden + j] = d_out * og * (1.0 - og);
            dc_next[j] = dc * fg;
          }
          std::fill(dh_next.begin(), dh_next.end(), 0.0);
          if (has_prev) {
            gemm_nt(dzt, wh.data(), dh_next.data(), 1, g4, hidden);
            if (node.inputs[2]->requires_grad) {
              gemm_tn(hs.row(prev).data(), dzt,
                      node.inputs[2]->grad_buffer().data(), 1, hidden, g4);
            }
          }
        }
        if (node.inputs[0]->requires_grad) {
          gemm_nt(dz.data(), wx.data(), node.inputs[0]->grad_buffer().data(), n, g4,
                  in);
        }
        if (node.inputs[1]->requires_grad) {
          gemm_tn(xs.data(), dz.data(), node.inputs[1]->grad_buffer().data(), n, in,
                  g4);
        }
        if (node.inputs[3]->requires_grad) {
          Tensor& gb = node.inputs[3]->grad_buffer();
          for (size_t t = 0; t < n; ++t) {
            for (size_t j = 0; j < g4; ++j) gb[j] += dz.at(t, j);
          }
        }
      });
}

Var bilstm(const Var& x, const LstmWeights& forward, const LstmWeights& backward) {
  return concat_cols(lstm_sequence(x, forward, false),
                     lstm_sequence(x, backward, true));
}

}  // namespace gain::num
