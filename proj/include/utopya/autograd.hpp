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

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

// Minimal tape-based reverse-mode differentiation over dense Eigen matrices.
//
// Every value on the tape is a 2-D matrix. Batched sequence data is laid out
// as (batch * time) rows by channels, sample-major. Nodes are appended in
// evaluation order, so replaying the tape backwards is a valid topological
// order and no graph search is needed.

namespace utopya::ag {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  std::string group = "head";
  bool trainable = true;
  // Buffers (batch-norm running statistics) are checkpointed but never
  // touched by the optimizer.
  bool buffer = false;
};

class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Parameter& add(std::string name, Matrix init, std::string group = "head");
  Parameter& add_buffer(std::string name, Matrix init);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> trainable();

  void zero_grad();
  void set_group_trainable(std::string_view group, bool trainable);
  Index scalar_count(bool include_buffers = false) const;

  // Value snapshots for early stopping and comparison.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*, std::less<>> by_name_;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Differentiable leaf that is not a parameter; its gradient is readable
  // through grad() after backward().
  Var input(Matrix value);
  Var param(Parameter& p);

  // Appends an op node. `fn` receives the upstream gradient and must push
  // gradients into the inputs via accumulate(). It is dropped when no input
  // requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward fn);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward fn);

  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }
  const Matrix& value(const Var& v) const { return nodes_[v.id()].value; }
  const Matrix& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  template <class Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  template <class Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    accumulate(v.id(), g);
  }

  // Gradient of the last backward() target with respect to v (zeros when v
  // did not influence it).
  Matrix grad(const Var& v) const;

  void backward(const Var& scalar_output);

  // Disable to evaluate without storing closures (inference).
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

}  // namespace utopya::ag
