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

#include "utopya/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace utopya::ag {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

void same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  same_shape(a, b, "add");
  int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  same_shape(a, b, "sub");
  int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  same_shape(a, b, "mul");
  int ia = a.id(), ib = b.id();
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(const Var& a, double s) {
  int ia = a.id();
  return a.tape().record(a.value() * s, {a}, [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_scalar(const Var& a, double s) {
  int ia = a.id();
  return a.tape().record(a.value().array() + s, {a}, [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var sum(const std::vector<Var>& terms) {
  require(!terms.empty(), "sum: no terms");
  Matrix v = terms.front().value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    same_shape(terms.front(), terms[i], "sum");
    v += terms[i].value();
  }
  std::vector<int> ids;
  for (const auto& x : terms) ids.push_back(x.id());
  return terms.front().tape().record(std::move(v), terms, [ids](Tape& t, const Matrix& g) {
    for (int id : ids) t.accumulate(id, g);
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias must be 1 x cols");
  int ia = a.id(), ir = row.id();
  Matrix v = a.value().rowwise() + row.value().row(0);
  return a.tape().record(std::move(v), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "mul_row: scale must be 1 x cols");
  int ia = a.id(), ir = row.id();
  Matrix v = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape().record(std::move(v), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) {
      t.accumulate(ia, (g.array().rowwise() * t.value(ir).row(0).array()).matrix());
    }
    if (t.needs_grad(ir)) t.accumulate(ir, g.cwiseProduct(t.value(ia)).colwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  require(col.cols() == 1 && col.rows() == a.rows(), "mul_col: scale must be rows x 1");
  int ia = a.id(), ic = col.id();
  Matrix v = a.value().array().colwise() * col.value().col(0).array();
  return a.tape().record(std::move(v), {a, col}, [ia, ic](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) {
      t.accumulate(ia, (g.array().colwise() * t.value(ic).col(0).array()).matrix());
    }
    if (t.needs_grad(ic)) t.accumulate(ic, g.cwiseProduct(t.value(ia)).rowwise().sum());
  });
}

Var div_col(const Var& a, const Var& col) {
  require(col.cols() == 1 && col.rows() == a.rows(), "div_col: divisor must be rows x 1");
  int ia = a.id(), ic = col.id();
  Matrix v = a.value().array().colwise() / col.value().col(0).array();
  return a.tape().record(std::move(v), {a, col}, [ia, ic](Tape& t, const Matrix& g) {
    const auto d = t.value(ic).col(0).array();
    if (t.needs_grad(ia)) t.accumulate(ia, (g.array().colwise() / d).matrix());
    if (t.needs_grad(ic)) {
      Eigen::ArrayXd s = g.cwiseProduct(t.value(ia)).rowwise().sum().array();
      t.accumulate(ic, (-s / d.square()).matrix());
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  int ia = a.id(), ib = b.id();
  Matrix v = a.value() * b.value();
  return a.tape().record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimension mismatch");
  int ia = a.id(), ib = b.id();
  Matrix v = a.value() * b.value().transpose();
  return a.tape().record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib));
    if (t.needs_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
  });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
  require(x.cols() == w.cols(), "linear: input width does not match weight");
  const bool has_bias = bias.valid();
  if (has_bias) require(bias.rows() == 1 && bias.cols() == w.rows(), "linear: bias must be 1 x out");
  Matrix v(x.rows(), w.rows());
  v.noalias() = x.value() * w.value().transpose();
  if (has_bias) v.rowwise() += bias.value().row(0);
  int ix = x.id(), iw = w.id(), ib = has_bias ? bias.id() : -1;
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(bias);
  return x.tape().record(std::move(v), inputs, [ix, iw, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ix)) {
      Matrix gx(g.rows(), t.value(iw).cols());
      gx.noalias() = g * t.value(iw);
      t.accumulate(ix, gx);
    }
    if (t.needs_grad(iw)) {
      Matrix gw(g.cols(), t.value(ix).cols());
      gw.noalias() = g.transpose() * t.value(ix);
      t.accumulate(iw, gw);
    }
    if (ib >= 0 && t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var relu(const Var& a) {
  int ia = a.id();
  return a.tape().record(a.value().cwiseMax(0.0), {a}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, (t.value(ia).array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  int ia = a.id();
  auto out = std::make_shared<Matrix>(v);
  return a.tape().record(std::move(v), {a}, [ia, out](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() * out->array() * (1.0 - out->array())).matrix());
  });
}

Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh().matrix();
  int ia = a.id();
  auto out = std::make_shared<Matrix>(v);
  return a.tape().record(std::move(v), {a}, [ia, out](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() * (1.0 - out->array().square())).matrix());
  });
}

Var square(const Var& a) {
  int ia = a.id();
  return a.tape().record(a.value().array().square().matrix(), {a}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
  });
}

Var sum_all(const Var& a) {
  int ia = a.id();
  Index r = a.rows(), c = a.cols();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape().record(std::move(v), {a}, [ia, r, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean_all(const Var& a) {
  require(a.value().size() > 0, "mean_all: empty input");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_sum(const Var& a) {
  int ia = a.id();
  Index c = a.cols();
  return a.tape().record(a.value().rowwise().sum(), {a}, [ia, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.col(0).replicate(1, c));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  Index rows = parts.front().rows(), cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Index>> spans;
  Index c0 = 0;
  for (const auto& p : parts) {
    v.middleCols(c0, p.cols()) = p.value();
    spans.emplace_back(p.id(), c0);
    c0 += p.cols();
  }
  return parts.front().tape().record(std::move(v), parts, [spans](Tape& t, const Matrix& g) {
    for (const auto& [id, start] : spans) {
      if (t.needs_grad(id)) t.accumulate(id, g.middleCols(start, t.value(id).cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no parts");
  Index cols = parts.front().cols(), rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Index>> spans;
  Index r0 = 0;
  for (const auto& p : parts) {
    v.middleRows(r0, p.rows()) = p.value();
    spans.emplace_back(p.id(), r0);
    r0 += p.rows();
  }
  return parts.front().tape().record(std::move(v), parts, [spans](Tape& t, const Matrix& g) {
    for (const auto& [id, start] : spans) {
      if (t.needs_grad(id)) t.accumulate(id, g.middleRows(start, t.value(id).rows()));
    }
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  int ia = a.id();
  Index r = a.rows(), c = a.cols();
  return a.tape().record(a.value().middleCols(start, count), {a}, [ia, r, c, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleCols(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var slice_rows(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  int ia = a.id();
  Index r = a.rows(), c = a.cols();
  return a.tape().record(a.value().middleRows(start, count), {a}, [ia, r, c, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleRows(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var group_mean_rows(const Var& a, Index group) {
  require(group > 0 && a.rows() % group == 0, "group_mean_rows: rows not divisible by group");
  const Index n = a.rows() / group;
  Matrix v(n, a.cols());
  for (Index i = 0; i < n; ++i) v.row(i) = a.value().middleRows(i * group, group).colwise().mean();
  int ia = a.id();
  return a.tape().record(std::move(v), {a}, [ia, n, group](Tape& t, const Matrix& g) {
    Matrix full(n * group, g.cols());
    const double inv = 1.0 / static_cast<double>(group);
    for (Index i = 0; i < n; ++i) full.middleRows(i * group, group) = (g.row(i) * inv).replicate(group, 1);
    t.accumulate(ia, full);
  });
}

Var segment_mean_rows(const Var& a, const std::vector<Index>& offsets) {
  require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == a.rows(),
          "segment_mean_rows: offsets must span all rows");
  const Index n = static_cast<Index>(offsets.size()) - 1;
  Matrix v(n, a.cols());
  for (Index i = 0; i < n; ++i) {
    const Index len = offsets[i + 1] - offsets[i];
    require(len > 0, "segment_mean_rows: empty segment");
    v.row(i) = a.value().middleRows(offsets[i], len).colwise().mean();
  }
  int ia = a.id();
  Index rows = a.rows();
  return a.tape().record(std::move(v), {a}, [ia, offsets, n, rows](Tape& t, const Matrix& g) {
    Matrix full(rows, g.cols());
    for (Index i = 0; i < n; ++i) {
      const Index len = offsets[i + 1] - offsets[i];
      full.middleRows(offsets[i], len) = (g.row(i) / static_cast<double>(len)).replicate(len, 1);
    }
    t.accumulate(ia, full);
  });
}

Var gather_rows(const Var& a, const std::vector<Index>& index) {
  Matrix v(static_cast<Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && index[i] < a.rows(), "gather_rows: index out of range");
    v.row(static_cast<Index>(i)) = a.value().row(index[i]);
  }
  int ia = a.id();
  Index rows = a.rows();
  return a.tape().record(std::move(v), {a}, [ia, index, rows](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, g.cols());
    for (std::size_t i = 0; i < index.size(); ++i) full.row(index[i]) += g.row(static_cast<Index>(i));
    t.accumulate(ia, full);
  });
}

Var repeat_rows(const Var& a, Index times) {
  require(times > 0, "repeat_rows: times must be positive");
  const Index n = a.rows();
  Matrix v(n * times, a.cols());
  for (Index i = 0; i < n; ++i) v.middleRows(i * times, times) = a.value().row(i).replicate(times, 1);
  int ia = a.id();
  return a.tape().record(std::move(v), {a}, [ia, n, times](Tape& t, const Matrix& g) {
    Matrix out(n, g.cols());
    for (Index i = 0; i < n; ++i) out.row(i) = g.middleRows(i * times, times).colwise().sum();
    t.accumulate(ia, out);
  });
}

Var select_rows(const std::vector<bool>& mask, const Var& a, const Var& b) {
  require(static_cast<Index>(mask.size()) == a.rows(), "select_rows: mask size mismatch");
  require(b.cols() == a.cols() && (b.rows() == a.rows() || b.rows() == 1), "select_rows: shape mismatch");
  const bool broadcast = b.rows() == 1 && a.rows() != 1;
  Matrix v(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    v.row(i) = mask[i] ? a.value().row(i) : b.value().row(broadcast ? 0 : i);
  }
  int ia = a.id(), ib = b.id();
  return a.tape().record(std::move(v), {a, b}, [ia, ib, mask, broadcast](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) {
      Matrix ga = g;
      for (Index i = 0; i < g.rows(); ++i) {
        if (!mask[i]) ga.row(i).setZero();
      }
      t.accumulate(ia, ga);
    }
    if (t.needs_grad(ib)) {
      Matrix gb = Matrix::Zero(broadcast ? 1 : g.rows(), g.cols());
      for (Index i = 0; i < g.rows(); ++i) {
        if (!mask[i]) gb.row(broadcast ? 0 : i) += g.row(i);
      }
      t.accumulate(ib, gb);
    }
  });
}

Var causal_taps(const Var& a, Index seq_len, Index dilation, Index taps) {
  require(seq_len > 0 && a.rows() % seq_len == 0, "causal_taps: rows not divisible by sequence length");
  require(dilation > 0 && taps > 0, "causal_taps: dilation and taps must be positive");
  const Index n = a.rows() / seq_len, c = a.cols();
  Matrix v = Matrix::Zero(a.rows(), taps * c);
  for (Index s = 0; s < n; ++s) {
    for (Index j = 0; j < taps; ++j) {
      const Index shift = j * dilation;
      if (shift >= seq_len) continue;
      v.block(s * seq_len + shift, j * c, seq_len - shift, c) = a.value().middleRows(s * seq_len, seq_len - shift);
    }
  }
  int ia = a.id();
  return a.tape().record(std::move(v), {a}, [ia, n, c, seq_len, dilation, taps](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(n * seq_len, c);
    for (Index s = 0; s < n; ++s) {
      for (Index j = 0; j < taps; ++j) {
        const Index shift = j * dilation;
        if (shift >= seq_len) continue;
        ga.middleRows(s * seq_len, seq_len - shift) += g.block(s * seq_len + shift, j * c, seq_len - shift, c);
      }
    }
    t.accumulate(ia, ga);
  });
}

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps) {
  require(gamma.rows() == 1 && gamma.cols() == a.cols() && beta.rows() == 1 && beta.cols() == a.cols(),
          "layer_norm: affine parameters must be 1 x cols");
  const Index r = a.rows(), c = a.cols();
  auto xhat = std::make_shared<Matrix>(r, c);
  auto inv_std = std::make_shared<Eigen::VectorXd>(r);
  for (Index i = 0; i < r; ++i) {
    const double mu = a.value().row(i).mean();
    const double var = (a.value().row(i).array() - mu).square().mean();
    (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (a.value().row(i).array() - mu) * (*inv_std)(i);
  }
  Matrix v = (xhat->array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  int ia = a.id(), ig = gamma.id(), ib = beta.id();
  return a.tape().record(std::move(v), {a, gamma, beta}, [ia, ig, ib, xhat, inv_std, c](Tape& t, const Matrix& g) {
    if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(*xhat).colwise().sum());
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (t.needs_grad(ia)) {
      Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
      Matrix dx(g.rows(), c);
      const double inv_c = 1.0 / static_cast<double>(c);
      for (Index i = 0; i < g.rows(); ++i) {
        const double s1 = dxhat.row(i).sum();
        const double s2 = dxhat.row(i).dot(xhat->row(i));
        dx.row(i) = (*inv_std)(i) * (dxhat.row(i).array() - inv_c * s1 - xhat->row(i).array() * (inv_c * s2));
      }
      t.accumulate(ia, dx);
    }
  });
}

Var softmax_rows(const Var& a) {
  Matrix v(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.value().row(i).maxCoeff();
    Eigen::RowVectorXd e = (a.value().row(i).array() - m).exp();
    v.row(i) = e / e.sum();
  }
  auto out = std::make_shared<Matrix>(v);
  int ia = a.id();
  return a.tape().record(std::move(v), {a}, [ia, out](Tape& t, const Matrix& g) {
    Eigen::VectorXd dot = g.cwiseProduct(*out).rowwise().sum();
    t.accumulate(ia, (out->array() * (g.array().colwise() - dot.array())).matrix());
  });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<Index>& targets) {
  require(static_cast<Index>(targets.size()) == logits.rows(), "softmax_cross_entropy: one target per row");
  const Index r = logits.rows(), c = logits.cols();
  auto prob = std::make_shared<Matrix>(r, c);
  double total = 0.0;
  for (Index i = 0; i < r; ++i) {
    require(targets[i] >= 0 && targets[i] < c, "softmax_cross_entropy: target out of range");
    const double m = logits.value().row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.value().row(i).array() - m).exp();
    const double z = e.sum();
    prob->row(i) = e / z;
    total += std::log(z) + m - logits.value()(i, targets[i]);
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<double>(r);
  int il = logits.id();
  return logits.tape().record(std::move(v), {logits}, [il, prob, targets, r](Tape& t, const Matrix& g) {
    Matrix d = *prob;
    for (Index i = 0; i < r; ++i) d(i, targets[i]) -= 1.0;
    t.accumulate(il, d * (g(0, 0) / static_cast<double>(r)));
  });
}

Var l2_normalize_rows(const Var& a, double eps) {
  Eigen::VectorXd norms = (a.value().rowwise().squaredNorm().array() + eps).sqrt();
  Matrix v = a.value().array().colwise() / norms.array();
  auto out = std::make_shared<Matrix>(v);
  int ia = a.id();
  return a.tape().record(std::move(v), {a}, [ia, out, norms](Tape& t, const Matrix& g) {
    Eigen::VectorXd dot = g.cwiseProduct(*out).rowwise().sum();
    Matrix d = (g - (out->array().colwise() * dot.array()).matrix()).array().colwise() / norms.array();
    t.accumulate(ia, d);
  });
}

Var dropout(const Var& a, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return a;
  require(p < 1.0, "dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  auto mask = std::make_shared<Matrix>(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) (*mask)(i, j) = keep(rng) ? s : 0.0;
  }
  int ia = a.id();
  return a.tape().record(a.value().cwiseProduct(*mask), {a},
                         [ia, mask](Tape& t, const Matrix& g) { t.accumulate(ia, g.cwiseProduct(*mask)); });
}

Var weight_norm_rows(const Var& v, const Var& g) {
  require(g.cols() == 1 && g.rows() == v.rows(), "weight_norm_rows: gain must be rows x 1");
  Eigen::VectorXd norms = v.value().rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) require(norms(i) > 0.0, "weight_norm_rows: zero direction vector");
  Matrix w = v.value().array().colwise() * (g.value().col(0).array() / norms.array());
  int iv = v.id(), ig = g.id();
  return v.tape().record(std::move(w), {v, g}, [iv, ig, norms](Tape& t, const Matrix& gw) {
    const Matrix& vv = t.value(iv);
    Eigen::VectorXd proj = gw.cwiseProduct(vv).rowwise().sum();  // (dw . v) per row
    if (t.needs_grad(ig)) t.accumulate(ig, (proj.array() / norms.array()).matrix());
    if (t.needs_grad(iv)) {
      const Eigen::ArrayXd gain = t.value(ig).col(0).array();
      Matrix dv = (gw.array().colwise() * (gain / norms.array())) -
                  (vv.array().colwise() * (gain * proj.array() / norms.array().cube()));
      t.accumulate(iv, dv);
    }
  });
}

Var conv2d_3x3(const Var& x, const Var& w, const Var& bias, Index batch, Index height, Index width) {
  const Index pixels = height * width;
  require(x.rows() == batch * pixels, "conv2d_3x3: row count does not match batch x height x width");
  const Index cin = x.cols();
  require(w.cols() == 9 * cin, "conv2d_3x3: weight must be cout x (9 * cin)");
  auto cols = std::make_shared<Matrix>(Matrix::Zero(batch * pixels, 9 * cin));
  const Matrix& xv = x.value();
  for (Index b = 0; b < batch; ++b) {
    for (Index yy = 0; yy < height; ++yy) {
      for (Index xx = 0; xx < width; ++xx) {
        const Index row = b * pixels + yy * width + xx;
        for (int dy = -1; dy <= 1; ++dy) {
          const Index sy = yy + dy;
          if (sy < 0 || sy >= height) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const Index sx = xx + dx;
            if (sx < 0 || sx >= width) continue;
            const Index tap = (dy + 1) * 3 + (dx + 1);
            cols->block(row, tap * cin, 1, cin) = xv.row(b * pixels + sy * width + sx);
          }
        }
      }
    }
  }
  Matrix v(batch * pixels, w.rows());
  v.noalias() = (*cols) * w.value().transpose();
  if (bias.valid()) v.rowwise() += bias.value().row(0);
  int ix = x.id(), iw = w.id(), ib = bias.valid() ? bias.id() : -1;
  std::vector<Var> inputs{x, w};
  if (bias.valid()) inputs.push_back(bias);
  return x.tape().record(std::move(v), inputs, [=](Tape& t, const Matrix& g) {
    if (t.needs_grad(iw)) {
      Matrix gw(g.cols(), cols->cols());
      gw.noalias() = g.transpose() * (*cols);
      t.accumulate(iw, gw);
    }
    if (ib >= 0 && t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (t.needs_grad(ix)) {
      Matrix gcols(g.rows(), cols->cols());
      gcols.noalias() = g * t.value(iw);
      Matrix gx = Matrix::Zero(batch * pixels, cin);
      for (Index b = 0; b < batch; ++b) {
        for (Index yy = 0; yy < height; ++yy) {
          for (Index xx = 0; xx < width; ++xx) {
            const Index row = b * pixels + yy * width + xx;
            for (int dy = -1; dy <= 1; ++dy) {
              const Index sy = yy + dy;
              if (sy < 0 || sy >= height) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                const Index sx = xx + dx;
                if (sx < 0 || sx >= width) continue;
                const Index tap = (dy + 1) * 3 + (dx + 1);
                gx.row(b * pixels + sy * width + sx) += gcols.block(row, tap * cin, 1, cin);
              }
            }
          }
        }
      }
      t.accumulate(ix, gx);
    }
  });
}

Var maxpool2x2(const Var& x, Index batch, Index height, Index width) {
  require(x.rows() == batch * height * width, "maxpool2x2: row count mismatch");
  const Index oh = height / 2, ow = width / 2, c = x.cols();
  require(oh > 0 && ow > 0, "maxpool2x2: input smaller than the pooling window");
  Matrix v(batch * oh * ow, c);
  auto arg = std::make_shared<Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>>(batch * oh * ow, c);
  const Matrix& xv = x.value();
  for (Index b = 0; b < batch; ++b) {
    for (Index yy = 0; yy < oh; ++yy) {
      for (Index xx = 0; xx < ow; ++xx) {
        const Index orow = b * oh * ow + yy * ow + xx;
        const Index base = b * height * width;
        const Index cand[4] = {base + (2 * yy) * width + 2 * xx, base + (2 * yy) * width + 2 * xx + 1,
                               base + (2 * yy + 1) * width + 2 * xx, base + (2 * yy + 1) * width + 2 * xx + 1};
        for (Index ch = 0; ch < c; ++ch) {
          Index best = cand[0];
          for (int k = 1; k < 4; ++k) {
            if (xv(cand[k], ch) > xv(best, ch)) best = cand[k];
          }
          v(orow, ch) = xv(best, ch);
          (*arg)(orow, ch) = best;
        }
      }
    }
  }
  int ix = x.id();
  Index in_rows = x.rows();
  return x.tape().record(std::move(v), {x}, [ix, arg, in_rows, c](Tape& t, const Matrix& g) {
    Matrix gx = Matrix::Zero(in_rows, c);
    for (Index ch = 0; ch < c; ++ch) {
      for (Index r = 0; r < g.rows(); ++r) gx((*arg)(r, ch), ch) += g(r, ch);
    }
    t.accumulate(ix, gx);
  });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Parameter& running_mean, Parameter& running_var,
               bool training, double momentum, double eps) {
  const Index n = x.rows(), c = x.cols();
  require(gamma.cols() == c && beta.cols() == c, "batch_norm: affine width mismatch");
  Eigen::RowVectorXd mean, var;
  if (training) {
    require(n > 1, "batch_norm: training mode needs more than one row");
    mean = x.value().colwise().mean();
    var = (x.value().rowwise() - mean).array().square().colwise().mean();
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    running_mean.value = (1.0 - momentum) * running_mean.value + momentum * Matrix(mean);
    running_var.value = (1.0 - momentum) * running_var.value + momentum * Matrix(var * unbias);
  } else {
    mean = running_mean.value.row(0);
    var = running_var.value.row(0);
  }
  Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt();
  auto xhat = std::make_shared<Matrix>((x.value().rowwise() - mean).array().rowwise() * inv_std.array());
  Matrix v = (xhat->array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(std::move(v), {x, gamma, beta}, [=](Tape& t, const Matrix& g) {
    if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(*xhat).colwise().sum());
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (t.needs_grad(ix)) {
      Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
      if (training) {
        const double inv_n = 1.0 / static_cast<double>(n);
        Eigen::RowVectorXd s1 = dxhat.colwise().sum();
        Eigen::RowVectorXd s2 = dxhat.cwiseProduct(*xhat).colwise().sum();
        Matrix dx = ((dxhat.rowwise() - s1 * inv_n).array() - xhat->array().rowwise() * (s2.array() * inv_n))
                        .rowwise() *
                    inv_std.array();
        t.accumulate(ix, dx);
      } else {
        t.accumulate(ix, (dxhat.array().rowwise() * inv_std.array()).matrix());
      }
    }
  });
}

}  // namespace utopya::ag
