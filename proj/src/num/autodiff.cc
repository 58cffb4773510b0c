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

#include "gain/num/autodiff.h"

#include <fmt/format.h>

#include <unordered_set>

#include "gain/errors.h"

namespace gain::num {

std::string_view group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder:
      return "encoder";
    case ParamGroup::kGazetteerNet:
      return "gazetteer_net";
    case ParamGroup::kCrf:
      return "crf";
    case ParamGroup::kOther:
      return "other";
  }
  return "other";
}

ParamGroup parse_group(std::string_view name) {
  for (auto g : {ParamGroup::kEncoder, ParamGroup::kGazetteerNet, ParamGroup::kCrf,
                 ParamGroup::kOther}) {
    if (group_name(g) == name) return g;
  }
  throw ConfigError(fmt::format("unknown parameter group '{}'", name));
}

Parameter& ParamSet::add(std::string name, ParamGroup group, Tensor init) {
  if (index_.contains(name)) {
    throw ContractError(fmt::format("duplicate parameter '{}'", name));
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->group = group;
  p->value = std::move(init);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamSet::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ContractError(fmt::format("no parameter named '{}'", name));
  }
  return *params_[it->second];
}

const Parameter& ParamSet::get(std::string_view name) const {
  return const_cast<ParamSet*>(this)->get(name);
}

bool ParamSet::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

void ParamSet::zero_grad() {
  for (auto& p : params_) {
    if (p->trainable) {
      p->grad = zeros_like(p->value);
    } else {
      p->grad = Tensor();
    }
  }
}

void ParamSet::set_trainable(ParamGroup group, bool trainable) {
  for (auto& p : params_) {
    if (p->group == group) p->trainable = trainable;
  }
}

void ParamSet::set_trainable_prefix(std::string_view prefix, bool trainable) {
  for (auto& p : params_) {
    if (p->name.starts_with(prefix)) p->trainable = trainable;
  }
}

Tensor& Node::grad_buffer() {
  if (!grad.allocated()) grad = zeros_like(val());
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::input(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var param(Parameter& p) {
  auto node = std::make_shared<Node>();
  node->external = &p.value;
  node->param = &p;
  node->requires_grad = p.trainable;
  return Var(std::move(node));
}

Var make_op(Tensor value, std::vector<Var> inputs,
            std::function<void(Node&)> backward) {
#ifndef NDEBUG
  if (!value.all_finite()) throw NumericError("non-finite value in forward pass");
#endif
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& in : inputs) {
    node->requires_grad = node->requires_grad || in.requires_grad();
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.ptr());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw ContractError("backward() needs a scalar loss");
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.allocated()) node->backward(*node);
  }
  for (Node* node : order) {
    if (node->param != nullptr && node->grad.allocated()) {
      Parameter& p = *node->param;
      if (!p.grad.allocated()) p.grad = zeros_like(p.value);
      p.grad += node->grad;
    }
  }
}

}  // namespace gain::num
