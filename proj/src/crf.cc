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

#include "gain/crf.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gain/errors.h"

namespace gain {

using num::Node;
using num::Tensor;
using num::Var;

namespace {

size_t num_tags(const CrfScores& s) { return s.transitions.cols(); }

void check_shapes(const CrfScores& s) {
  const size_t t = num_tags(s);
  if (s.emissions.ndim() != 2 || s.emissions.cols() != t ||
      s.transitions.rows() != t || s.start.size() != t || s.end.size() != t) {
    throw ContractError("crf: inconsistent score table shapes");
  }
  if (s.emissions.rows() == 0) throw ContractError("crf: empty sequence");
  if (!s.emissions.all_finite()) throw NumericError("crf: non-finite emission score");
}

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// alpha[i, y]: log-sum of scores of prefixes ending in tag y at position i.
Tensor forward_table(const CrfScores& s) {
  const size_t n = s.emissions.rows(), t = num_tags(s);
  Tensor alpha = Tensor::matrix(n, t);
  for (size_t y = 0; y < t; ++y) alpha.at(0, y) = s.start[y] + s.emissions.at(0, y);
  std::vector<double> buf(t);
  for (size_t i = 1; i < n; ++i) {
    for (size_t y = 0; y < t; ++y) {
      for (size_t a = 0; a < t; ++a) buf[a] = alpha.at(i - 1, a) + s.transitions.at(a, y);
      alpha.at(i, y) = s.emissions.at(i, y) + log_sum_exp(buf);
    }
  }
  return alpha;
}

// beta[i, y]: log-sum of scores of suffixes after position i given tag y.
Tensor backward_table(const CrfScores& s) {
  const size_t n = s.emissions.rows(), t = num_tags(s);
  Tensor beta = Tensor::matrix(n, t);
  for (size_t y = 0; y < t; ++y) beta.at(n - 1, y) = s.end[y];
  std::vector<double> buf(t);
  for (size_t i = n - 1; i-- > 0;) {
    for (size_t a = 0; a < t; ++a) {
      for (size_t y = 0; y < t; ++y) {
        buf[y] = s.transitions.at(a, y) + s.emissions.at(i + 1, y) + beta.at(i + 1, y);
      }
      beta.at(i, a) = log_sum_exp(buf);
    }
  }
  return beta;
}

double partition_from(const CrfScores& s, const Tensor& alpha) {
  const size_t n = alpha.rows(), t = num_tags(s);
  std::vector<double> buf(t);
  for (size_t y = 0; y < t; ++y) buf[y] = alpha.at(n - 1, y) + s.end[y];
  return log_sum_exp(buf);
}

}  // namespace

double crf_path_score(const CrfScores& s, std::span<const int> tags) {
  check_shapes(s);
  if (tags.size() != s.emissions.rows()) {
    throw ContractError("crf: tag sequence length differs from emissions");
  }
  for (int v : tags) {
    if (v < 0 || static_cast<size_t>(v) >= num_tags(s)) {
      throw ContractError(fmt::format("crf: tag index {} out of range", v));
    }
  }
  const auto at = [](int v) { return static_cast<size_t>(v); };
  double score = s.start[at(tags[0])] + s.end[at(tags.back())];
  for (size_t i = 0; i < tags.size(); ++i) {
    score += s.emissions.at(i, at(tags[i]));
    if (i > 0) score += s.transitions.at(at(tags[i - 1]), at(tags[i]));
  }
  return score;
}

double crf_log_partition(const CrfScores& s) {
  check_shapes(s);
  return partition_from(s, forward_table(s));
}

std::vector<int> crf_viterbi(const CrfScores& s) {
  check_shapes(s);
  const size_t n = s.emissions.rows(), t = num_tags(s);
  std::vector<double> best(t), next(t);
  std::vector<std::vector<int>> back(n, std::vector<int>(t, 0));
  for (size_t y = 0; y < t; ++y) best[y] = s.start[y] + s.emissions.at(0, y);
  for (size_t i = 1; i < n; ++i) {
    for (size_t y = 0; y < t; ++y) {
      size_t arg = 0;
      double mx = best[0] + s.transitions.at(0, y);
      for (size_t a = 1; a < t; ++a) {
        const double v = best[a] + s.transitions.at(a, y);
        if (v > mx) {
          mx = v;
          arg = a;
        }
      }
      next[y] = mx + s.emissions.at(i, y);
      back[i][y] = static_cast<int>(arg);
    }
    best.swap(next);
  }
  size_t last = 0;
  double mx = best[0] + s.end[0];
  for (size_t y = 1; y < t; ++y) {
    if (best[y] + s.end[y] > mx) {
      mx = best[y] + s.end[y];
      last = y;
    }
  }
  std::vector<int> path(n);
  path[n - 1] = static_cast<int>(last);
  for (size_t i = n - 1; i > 0; --i) {
    path[i - 1] = back[i][static_cast<size_t>(path[i])];
  }
  return path;
}

Var crf_nll(const Var& emissions, const Var& transitions, const Var& start,
            const Var& end, std::span<const int> gold) {
  const CrfScores s{emissions.value(), transitions.value(), start.value(), end.value()};
  const double score = crf_path_score(s, gold);
  Tensor alpha = forward_table(s);
  const double log_z = partition_from(s, alpha);
  std::vector<int> tags(gold.begin(), gold.end());
  return num::make_op(
      Tensor::scalar(log_z - score), {emissions, transitions, start, end},
      [alpha = std::move(alpha), log_z, tags = std::move(tags)](Node& node) {
        const double g = node.grad[0];
        const Tensor& em = node.inputs[0]->val();
        const Tensor& tr = node.inputs[1]->val();
        const Tensor& st = node.inputs[2]->val();
        const Tensor& en = node.inputs[3]->val();
        const CrfScores sc{em, tr, st, en};
        const Tensor beta = backward_table(sc);
        const size_t n = em.rows(), t = tr.cols();
        const auto tag = [&](size_t i) { return static_cast<size_t>(tags[i]); };
        const bool want[4] = {node.inputs[0]->requires_grad, node.inputs[1]->requires_grad,
                              node.inputs[2]->requires_grad, node.inputs[3]->requires_grad};

        if (want[0]) {
          Tensor& ge = node.inputs[0]->grad_buffer();
          for (size_t i = 0; i < n; ++i) {
            for (size_t y = 0; y < t; ++y) {
              ge.at(i, y) += g * std::exp(alpha.at(i, y) + beta.at(i, y) - log_z);
            }
            ge.at(i, tag(i)) -= g;
          }
        }
        if (want[1]) {
          Tensor& gt = node.inputs[1]->grad_buffer();
          for (size_t i = 1; i < n; ++i) {
            for (size_t a = 0; a < t; ++a) {
              const double left = alpha.at(i - 1, a) - log_z;
              for (size_t y = 0; y < t; ++y) {
                gt.at(a, y) +=
                    g * std::exp(left + tr.at(a, y) + em.at(i, y) + beta.at(i, y));
              }
            }
            gt.at(tag(i - 1), tag(i)) -= g;
          }
        }
        if (want[2]) {
          Tensor& gs = node.inputs[2]->grad_buffer();
          for (size_t y = 0; y < t; ++y) {
            gs[y] += g * std::exp(alpha.at(0, y) + beta.at(0, y) - log_z);
          }
          gs[tag(0)] -= g;
        }
        if (want[3]) {
          Tensor& gn = node.inputs[3]->grad_buffer();
          for (size_t y = 0; y < t; ++y) {
            gn[y] += g * std::exp(alpha.at(n - 1, y) + en[y] - log_z);
          }
          gn[tag(n - 1)] -= g;
        }
      });
}

}  // namespace gain
