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

#ifndef GAIN_NUM_AUTODIFF_H_
#define GAIN_NUM_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gain/num/tensor.h"

namespace gain::num {

// Learning-rate groups.
enum class ParamGroup { kEncoder, kGazetteerNet, kCrf, kOther };

std::string_view group_name(ParamGroup group);
ParamGroup parse_group(std::string_view name);

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kOther;
  Tensor value;
  Tensor grad;  // unallocated until a backward pass or zero_grad()
  bool trainable = true;

  // AdamW state.
  Tensor adam_m;
  Tensor adam_v;
  int64_t step = 0;
};

// Named parameters in insertion order. Parameter addresses are stable for
// the lifetime of the set, including across moves.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;

  Parameter& add(std::string name, ParamGroup group, Tensor init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  size_t size() const { return params_.size(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Allocates zero gradients on every trainable parameter.
  void zero_grad();
  void set_trainable(ParamGroup group, bool trainable);
  void set_trainable_prefix(std::string_view prefix, bool trainable);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  const Tensor* external = nullptr;  // parameter leaves read through this
  Parameter* param = nullptr;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;

  const Tensor& val() const { return external != nullptr ? *external : value; }
  // Gradient buffer, zero-initialised on first use.
  Tensor& grad_buffer();
};

// Handle to a node of the computation graph.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  // Leaf that never receives gradient.
  static Var constant(Tensor value);
  // Leaf whose gradient is kept on the node (inspect with grad()).
  static Var input(Tensor value);

  const Tensor& value() const { return node_->val(); }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const { return value()[0]; }

  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Leaf bound to a parameter; requires gradient iff the parameter is
// trainable. Gradients land in `param.grad` after backward().
Var param(Parameter& p);

// Builds an op result. `backward` runs only when some input requires grad;
// it reads node.grad and accumulates into node.inputs[i]->grad_buffer().
Var make_op(Tensor value, std::vector<Var> inputs,
            std::function<void(Node&)> backward);

// Reverse-mode sweep from a scalar. Parameter gradients are added into
// Parameter::grad.
void backward(const Var& loss);

}  // namespace gain::num

#endif  // GAIN_NUM_AUTODIFF_H_
