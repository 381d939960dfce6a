/*
 * Copyright 2026 The UTOPYA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "utopya/autograd.hpp"

#include <stdexcept>

namespace utopya::ag {

Parameter& ParamStore::add(std::string name, Matrix init, std::string group) {
  if (by_name_.count(name) != 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(init);
  p->group = std::move(group);
  Parameter& ref = *p;
  by_name_.emplace(ref.name, &ref);
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParamStore::add_buffer(std::string name, Matrix init) {
  Parameter& p = add(std::move(name), std::move(init), "buffer");
  p.trainable = false;
  p.buffer = true;
  return p;
}

Parameter* ParamStore::find(std::string_view name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

Parameter& ParamStore::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter: " + std::string(name));
  return *p;
}

const Parameter& ParamStore::at(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter: " + std::string(name));
  return *p;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable && !p->buffer) out.push_back(p.get());
  }
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.resize(0, 0);
}

void ParamStore::set_group_trainable(std::string_view group, bool trainable) {
  for (auto& p : params_) {
    if (!p->buffer && p->group == group) p->trainable = trainable;
  }
}

Index ParamStore::scalar_count(bool include_buffers) const {
  Index n = 0;
  for (const auto& p : params_) {
    if (include_buffers || !p->buffer) n += p->value.size();
  }
  return n;
}

std::vector<Matrix> ParamStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParamStore::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw std::invalid_argument("snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.needs_grad = grad_enabled_ && p.trainable && !p.buffer;
  n.param = n.needs_grad ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward fn) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.valid() && nodes_[v.id()].needs_grad) {
        needs = true;
        break;
      }
    }
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward fn) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.valid() && nodes_[v.id()].needs_grad) {
        needs = true;
        break;
      }
    }
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& out) {
  if (out.rows() != 1 || out.cols() != 1) {
    throw std::invalid_argument("backward() requires a 1x1 output");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[out.id()].needs_grad) return;
  nodes_[out.id()].grad = Matrix::Ones(1, 1);
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
    }
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) {
        n.param->grad = n.grad;
      } else {
        n.param->grad += n.grad;
      }
    }
  }
}

}  // namespace utopya::ag
