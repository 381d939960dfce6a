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

#include "utopya/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace utopya::testing {

struct GradReport {
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double analytic_norm = 0.0;
  int coordinates = 0;
};

inline double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-10});
  return std::sqrt(diff) / denom;
}

// Compares d f / d inputs from the tape with central differences. `f`
// receives differentiable leaves built from `inputs` and returns a scalar.
inline GradReport check_inputs(const std::function<ag::Var(ag::Tape&, const std::vector<ag::Var>&)>& f,
                               std::vector<ag::Matrix> inputs, double h = 1e-6, int max_coords = 60,
                               std::uint64_t seed = 1) {
  ag::Tape tape;
  std::vector<ag::Var> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.input(m));
  ag::Var out = f(tape, leaves);
  tape.backward(out);
  std::vector<ag::Matrix> grads;
  for (const auto& v : leaves) grads.push_back(tape.grad(v));

  auto eval = [&](const std::vector<ag::Matrix>& xs) {
    ag::Tape t;
    std::vector<ag::Var> ls;
    for (const auto& m : xs) ls.push_back(t.input(m));
    return f(t, ls).scalar();
  };
  std::mt19937_64 rng(seed);
  std::vector<double> a, n;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto size = inputs[k].size();
    std::vector<ag::Index> coords(static_cast<std::size_t>(size));
    for (ag::Index i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(max_coords)));
    for (ag::Index c : coords) {
      const double orig = inputs[k].data()[c];
      inputs[k].data()[c] = orig + h;
      const double up = eval(inputs);
      inputs[k].data()[c] = orig - h;
      const double down = eval(inputs);
      inputs[k].data()[c] = orig;
      n.push_back((up - down) / (2 * h));
      a.push_back(grads[k].data()[c]);
    }
  }
  GradReport r;
  r.rel_error = rel_error(a, n);
  double s = 0;
  for (double v : a) s += v * v;
  r.analytic_norm = std::sqrt(s);
  r.coordinates = static_cast<int>(a.size());
  return r;
}

// Same against parameter values; `f` must build its graph from the store.
inline GradReport check_params(const std::function<ag::Var(ag::Tape&)>& f, const std::vector<ag::Parameter*>& params,
                               double h = 1e-6, int max_coords = 20, std::uint64_t seed = 1) {
  for (auto* p : params) p->grad.resize(0, 0);
  {
    ag::Tape tape;
    ag::Var out = f(tape);
    tape.backward(out);
  }
  auto eval = [&] {
    ag::Tape t;
    t.set_grad_enabled(false);
    return f(t).scalar();
  };
  std::mt19937_64 rng(seed);
  std::vector<double> a, n;
  for (auto* p : params) {
    const auto size = p->value.size();
    std::vector<ag::Index> coords(static_cast<std::size_t>(size));
    for (ag::Index i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(max_coords)));
    for (ag::Index c : coords) {
      const double orig = p->value.data()[c];
      p->value.data()[c] = orig + h;
      const double up = eval();
      p->value.data()[c] = orig - h;
      const double down = eval();
      p->value.data()[c] = orig;
      n.push_back((up - down) / (2 * h));
      a.push_back(p->grad.size() ? p->grad.data()[c] : 0.0);
    }
  }
  GradReport r;
  r.rel_error = rel_error(a, n);
  double s = 0;
  for (double v : a) s += v * v;
  r.analytic_norm = std::sqrt(s);
  r.coordinates = static_cast<int>(a.size());
  return r;
}

}  // namespace utopya::testing
