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

#include <cmath>

#include <fmt/format.h>

#include "doctest.h"
#include "gain/errors.h"
#include "gain/gradsuite.h"
#include "gain/num/gradcheck.h"
#include "gain/num/ops.h"
#include "gain/num/optim.h"

namespace gain::num {
namespace {

using gain::op_gradient_suite;

Tensor random_tensor(Rng& rng, std::vector<size_t> shape, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Scalarises an op output with fixed random weights so that gradients of
// normalised outputs (softmax rows) are not trivially zero.
Var weighted_sum(const Var& y, const Tensor& weights) {
  return sum(mul(y, Var::constant(weights)));
}

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

TEST_CASE("every differentiable op passes finite differences in isolation") {
  const auto suite = op_gradient_suite(kStep, 1234);
  CHECK(suite.size() >= 25);
  for (const auto& e : suite) {
    CAPTURE(e.name);
    CHECK(e.result.coordinates > 0);
    CHECK(e.result.max_relative_error < kTolerance);
  }
}

TEST_CASE("stop_gradient contract") {
  Rng rng(2);
  Var x = Var::input(random_tensor(rng, {2, 3}));
  Var y = Var::input(random_tensor(rng, {2, 3}));
  Var sg = stop_gradient(x);
  CHECK(sg.value().bit_equal(x.value()));
  backward(sum(mul(sg, y)));
  CHECK_FALSE(x.grad().allocated());
  REQUIRE(y.grad().allocated());
  CHECK(y.grad().bit_equal(x.value()));
}

TEST_CASE("softmax and log-softmax identities") {
  Rng rng(3);
  Var x = Var::constant(random_tensor(rng, {5, 13}, -20, 20));
  Var s = softmax_rows(x);
  Var ls = log_softmax_rows(x);
  for (size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (size_t c = 0; c < 13; ++c) {
      total += s.value().at(r, c);
      CHECK(std::abs(std::log(s.value().at(r, c)) - ls.value().at(r, c)) < 1e-10);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("kl_pair_loss values") {
  Rng rng(4);
  const Tensor a = random_tensor(rng, {4, 13}, -3, 3);
  const Tensor b = random_tensor(rng, {4, 13}, -3, 3);
  CHECK(kl_pair_loss(Var::constant(a), Var::constant(a)).item() == 0.0);
  const double ab = kl_pair_loss(Var::constant(a), Var::constant(b)).item();
  const double ba = kl_pair_loss(Var::constant(b), Var::constant(a)).item();
  CHECK(std::abs(ab - ba) < 1e-12);
  CHECK(ab > 0.0);
  CHECK_THROWS_AS(kl_pair_loss(Var::constant(a), Var::constant(Tensor::matrix(3, 13))),
                  ContractError);
}

TEST_CASE("kl_pair_loss scalar oracle") {
  // p = (0.5, 0.5, 0, ...), q = (0.9, 0.1, 0, ...) built from logits.
  Tensor a = Tensor::matrix(1, 13, -1000.0);
  Tensor b = Tensor::matrix(1, 13, -1000.0);
  a.at(0, 0) = 0.0;
  a.at(0, 1) = 0.0;
  b.at(0, 0) = std::log(0.9);
  b.at(0, 1) = std::log(0.1);
  const double kl_pq = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  const double kl_qp = 0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5);
  const double loss = kl_pair_loss(Var::constant(a), Var::constant(b)).item();
  CHECK(std::abs(loss - (kl_pq + kl_qp)) < 1e-12);
}

TEST_CASE("kl_pair_loss gradients follow the stop-gradient placement") {
  Rng rng(5);
  Var a = Var::input(random_tensor(rng, {2, 13}, -2, 2));
  Var b = Var::input(random_tensor(rng, {2, 13}, -2, 2));
  backward(kl_pair_loss(a, b));
  Tensor p = softmax_rows(Var::constant(a.value())).value();
  Tensor q = softmax_rows(Var::constant(b.value())).value();
  for (size_t i = 0; i < p.size(); ++i) {
    CHECK(std::abs(a.grad()[i] - (p[i] - q[i]) / 2.0) < 1e-12);
    CHECK(std::abs(b.grad()[i] - (q[i] - p[i]) / 2.0) < 1e-12);
  }
}

TEST_CASE("mse_loss") {
  Rng rng(6);
  const Tensor a = random_tensor(rng, {2, 3});
  CHECK(mse_loss(Var::constant(a), Var::constant(a)).item() == 0.0);
  Tensor b = a;
  b[0] += 3.0;
  CHECK(std::abs(mse_loss(Var::constant(a), Var::constant(b)).item() - 9.0 / 6.0) < 1e-12);
}

LstmWeights constant_weights(const Tensor& wx, const Tensor& wh, const Tensor& bias) {
  return {Var::constant(wx), Var::constant(wh), Var::constant(bias)};
}

TEST_CASE("bilstm with zero parameters yields zeros") {
  Rng rng(8);
  Var x = Var::constant(random_tensor(rng, {5, 4}));
  auto zero = constant_weights(Tensor::matrix(4, 12), Tensor::matrix(3, 12), Tensor::vector(12));
  Var y = bilstm(x, zero, zero);
  CHECK(y.value().shape() == std::vector<size_t>{5, 6});
  for (double v : y.value().values()) CHECK(v == 0.0);
}

TEST_CASE("bilstm with one step sees the same input both ways") {
  Rng rng(9);
  auto w = constant_weights(random_tensor(rng, {4, 8}), random_tensor(rng, {2, 8}),
                            random_tensor(rng, {8}));
  Var x = Var::constant(random_tensor(rng, {1, 4}));
  Var y = bilstm(x, w, w);
  CHECK(y.value().at(0, 0) == y.value().at(0, 2));
  CHECK(y.value().at(0, 1) == y.value().at(0, 3));
}

TEST_CASE("fused LSTM equals unrolled lstm_cell steps") {
  Rng rng(10);
  auto w = constant_weights(random_tensor(rng, {3, 8}), random_tensor(rng, {2, 8}),
                            random_tensor(rng, {8}));
  Tensor xs = random_tensor(rng, {5, 3});
  for (bool reverse : {false, true}) {
    Var fused = lstm_sequence(Var::constant(xs), w, reverse);
    Var h = Var::constant(Tensor::matrix(1, 2));
    Var c = Var::constant(Tensor::matrix(1, 2));
    std::vector<Var> rows(5);
    for (size_t s = 0; s < 5; ++s) {
      const size_t t = reverse ? 4 - s : s;
      Var x = Var::constant(Tensor({1, 3}, std::vector<double>(xs.row(t).begin(), xs.row(t).end())));
      std::tie(h, c) = lstm_cell(x, h, c, w);
      rows[t] = h;
    }
    Var unrolled = stack_rows(rows);
    for (size_t i = 0; i < unrolled.value().size(); ++i) {
      CHECK(std::abs(unrolled.value()[i] - fused.value()[i]) < 1e-14);
    }
  }
}

TEST_CASE("bilstm 3x4 -> 6 gradient check") {
  Rng rng(11);
  ParamSet params;
  params.add("x", ParamGroup::kOther, random_tensor(rng, {3, 4}));
  for (const char* dir : {"f", "b"}) {
    params.add(fmt::format("{}.wx", dir), ParamGroup::kOther, random_tensor(rng, {4, 12}));
    params.add(fmt::format("{}.wh", dir), ParamGroup::kOther, random_tensor(rng, {3, 12}));
    params.add(fmt::format("{}.b", dir), ParamGroup::kOther, random_tensor(rng, {12}));
  }
  const Tensor weights = random_tensor(rng, {3, 6});
  auto loss_fn = [&]() {
    LstmWeights f{param(params.get("f.wx")), param(params.get("f.wh")), param(params.get("f.b"))};
    LstmWeights b{param(params.get("b.wx")), param(params.get("b.wh")), param(params.get("b.b"))};
    return weighted_sum(bilstm(param(params.get("x")), f, b), weights);
  };
  Rng check_rng(1);
  CHECK(grad_check(loss_fn, params, kStep, 1000, check_rng).max_relative_error < kTolerance);
}

TEST_CASE("bilstm rejects mismatched dimensions") {
  Rng rng(12);
  auto w = constant_weights(random_tensor(rng, {4, 8}), random_tensor(rng, {2, 8}),
                            random_tensor(rng, {8}));
  CHECK_THROWS_AS(bilstm(Var::constant(random_tensor(rng, {3, 5})), w, w), ContractError);
}

TEST_CASE("adamw one step on a scalar") {
  ParamSet params;
  Parameter& p = params.add("p", ParamGroup::kOther, Tensor::vector(1, 1.0));
  p.grad = Tensor::vector(1, 1.0);
  OptimizerConfig cfg;
  cfg.learning_rates[ParamGroup::kOther] = 0.1;
  cfg.weight_decay = 0.0;
  adamw_step(params, cfg);
  CHECK(std::abs(p.value[0] - 0.9) < 1e-8);
  CHECK(p.step == 1);
  CHECK_FALSE(p.grad.allocated());
}

TEST_CASE("adamw zero gradient without decay leaves parameters unchanged") {
  ParamSet params;
  Parameter& p = params.add("p", ParamGroup::kEncoder, Tensor::vector(3, 0.25));
  params.zero_grad();
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_step(params, cfg);
  for (double v : p.value.values()) CHECK(v == 0.25);
}

TEST_CASE("adamw weight decay shrinks by lr * wd * p") {
  ParamSet params;
  Parameter& p = params.add("p", ParamGroup::kOther, Tensor::vector(1, 2.0));
  p.grad = Tensor::vector(1, 1e-30);
  OptimizerConfig cfg;
  cfg.learning_rates[ParamGroup::kOther] = 0.1;
  cfg.weight_decay = 0.01;
  adamw_step(params, cfg);
  CHECK(std::abs((2.0 - p.value[0]) - 0.1 * 0.01 * 2.0) < 1e-12);
}

TEST_CASE("adamw requires gradients and uses group rates") {
  ParamSet params;
  params.add("enc", ParamGroup::kEncoder, Tensor::vector(1, 1.0));
  Parameter& crf = params.add("crf", ParamGroup::kCrf, Tensor::vector(1, 1.0));
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  CHECK_THROWS_AS(adamw_step(params, cfg), ContractError);
  params.zero_grad();
  crf.grad[0] = 1.0;
  params.get("enc").grad[0] = 1.0;
  adamw_step(params, cfg);
  CHECK(std::abs(params.get("enc").value[0] - (1.0 - 1e-3)) < 1e-9);
  CHECK(std::abs(crf.value[0] - (1.0 - 1e-2)) < 1e-9);

  // Frozen parameters need no gradient and do not move.
  params.set_trainable(ParamGroup::kEncoder, false);
  params.zero_grad();
  crf.grad[0] = 1.0;
  adamw_step(params, cfg);
  CHECK(std::abs(params.get("enc").value[0] - (1.0 - 1e-3)) < 1e-9);
}

TEST_CASE("grad_check on a linear layer with cross-entropy") {
  Rng rng(13);
  ParamSet params;
  params.add("w", ParamGroup::kOther, random_tensor(rng, {4, 5}));
  params.add("b", ParamGroup::kOther, random_tensor(rng, {5}));
  const Tensor x = random_tensor(rng, {3, 4});
  const std::vector<int> targets = {0, 4, 2};
  auto loss_fn = [&]() {
    return cross_entropy(add_row(matmul(Var::constant(x), param(params.get("w"))),
                                 param(params.get("b"))),
                         targets);
  };
  Rng check_rng(2);
  CHECK(grad_check(loss_fn, params, 1e-5, 100, check_rng).max_relative_error < 1e-6);
}

TEST_CASE("grad_check on an ignored parameter reports zero error") {
  ParamSet params;
  params.add("used", ParamGroup::kOther, Tensor::vector(2, 0.5));
  params.add("ignored", ParamGroup::kOther, Tensor::vector(2, 0.5));
  auto loss_fn = [&]() { return sum(mul(param(params.get("used")), param(params.get("used")))); };
  std::vector<Parameter*> only_ignored = {&params.get("ignored")};
  Rng rng(3);
  GradCheckResult r = grad_check(loss_fn, only_ignored, 1e-5, 10, rng);
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.analytic == 0.0);
  CHECK(r.numeric == 0.0);
}

TEST_CASE("grad_check surfaces NaN losses") {
  ParamSet params;
  params.add("x", ParamGroup::kOther, Tensor::vector(1, 1.0));
  auto loss_fn = [&]() {
    return make_op(Tensor::scalar(std::nan("")), {param(params.get("x"))}, [](Node&) {});
  };
  Rng rng(4);
  CHECK_THROWS_AS(grad_check(loss_fn, params, 1e-5, 1, rng), NumericError);
}

TEST_CASE("dropout is identity at eval and inverted-scaled in training") {
  Rng rng(14);
  Var x = Var::constant(Tensor::matrix(50, 40, 1.0));
  Var eval = dropout(x, 0.1, rng, false);
  CHECK(eval.value().bit_equal(x.value()));
  Var train = dropout(x, 0.1, rng, true);
  size_t zeros = 0;
  for (double v : train.value().values()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.9) < 1e-15));
    zeros += v == 0.0 ? 1 : 0;
  }
  CHECK(zeros > 100);
  CHECK(zeros < 300);
}

TEST_CASE("grad_check holds stop-gradient branches fixed") {
  Rng rng(77);
  ParamSet ps;
  Tensor a0(std::vector<size_t>{3, 13}), b0(std::vector<size_t>{3, 13});
  for (double& v : a0.values()) v = rng.uniform(-1, 1);
  for (double& v : b0.values()) v = rng.uniform(-1, 1);
  Parameter& a = ps.add("a", ParamGroup::kOther, a0);
  Parameter& b = ps.add("b", ParamGroup::kOther, b0);
  auto loss = [&] { return kl_pair_loss(param(a), param(b)); };
  CHECK(grad_check(loss, ps, 1e-5, 100, rng).max_relative_error < 1e-6);

  // Outside a freeze, finite differences of the value see through the
  // stopped branches and disagree with the tape.
  backward(loss());
  const double analytic = a.grad[0];
  const double saved = a.value[0];
  a.value[0] = saved + 1e-5;
  const double plus = loss().item();
  a.value[0] = saved - 1e-5;
  const double minus = loss().item();
  a.value[0] = saved;
  CHECK(std::abs((plus - minus) / 2e-5 - analytic) > 1e-4);

  FrozenStopGradients freeze;
  Var x = Var::constant(a0);
  stop_gradient(x);
  freeze.replay();
  CHECK(stop_gradient(Var::constant(b0)).value() == a0);
  CHECK_THROWS_AS(stop_gradient(x), ContractError);
}

}  // namespace
}  // namespace gain::num
