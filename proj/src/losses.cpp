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

#include "utopya/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace utopya {

namespace {

// log(1 + exp(x)) without overflow; exact 0 at -inf.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

Var loss_pred(const Var& y_hat, const Matrix& y, int horizon) {
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols() || y.cols() != channels::kTargets * horizon) {
    throw std::invalid_argument("loss_pred: shape mismatch");
  }
  const Index B = y.rows();
  const Index n_cont = static_cast<Index>(channels::kContinuousTargets) * horizon;
  const Index n_bin = static_cast<Index>(channels::kBinaryTargets) * horizon;
  const Matrix& a = y_hat.value();
  double mse = 0.0, bce = 0.0;
  for (Index b = 0; b < B; ++b) {
    for (Index j = 0; j < n_cont; ++j) mse += (a(b, j) - y(b, j)) * (a(b, j) - y(b, j));
    for (Index j = n_cont; j < n_cont + n_bin; ++j) {
      const double t = y(b, j);
      if (t != 0.0 && t != 1.0) throw std::invalid_argument("loss_pred: binary target outside {0,1}");
      // -log p_t with p_t = sigmoid(s a), s = +1 for positives.
      bce += softplus(t == 1.0 ? -a(b, j) : a(b, j));
    }
  }
  const double n_c = static_cast<double>(B * n_cont), n_b = static_cast<double>(B * n_bin);
  const int iy = y_hat.id();
  return y_hat.tape().record(scalar(mse / n_c + bce / n_b), {y_hat},
                             [iy, y, n_cont, n_bin, n_c, n_b](Tape& t, const Matrix& g) {
                               const Matrix& a = t.value(iy);
                               Matrix d(a.rows(), a.cols());
                               d.leftCols(n_cont) = (a.leftCols(n_cont) - y.leftCols(n_cont)) * (2.0 / n_c);
                               for (Index b = 0; b < a.rows(); ++b) {
                                 for (Index j = n_cont; j < n_cont + n_bin; ++j) {
                                   d(b, j) = (stable_sigmoid(a(b, j)) - y(b, j)) / n_b;
                                 }
                               }
                               t.accumulate(iy, d * g(0, 0));
                             });
}

namespace {

struct FocalTerm {
  double value;
  double grad;  // d value / d logit
};

FocalTerm focal_term(double a, bool label, double gamma, double w_pos, double w_neg) {
  const double s = label ? 1.0 : -1.0;
  const double w = label ? w_pos : w_neg;
  double p = stable_sigmoid(s * a);
  double log_p = -softplus(-s * a);
  bool clamped = false;
  if (p < kProbClamp || p > 1.0 - kProbClamp) {
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    log_p = std::log(p);
    clamped = true;
  }
  const double q = 1.0 - p;
  const double value = -w * std::pow(q, gamma) * log_p;
  if (clamped) return {value, 0.0};
  // d/dp of -w q^g log p, then dp/da = s p q.
  const double dq_pow = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0);
  const double dvalue_dp = -w * (-dq_pow * log_p + std::pow(q, gamma) / p);
  return {value, dvalue_dp * s * p * q};
}

}  // namespace

double focal_value(double logit, bool label, double gamma, double w_pos, double w_neg) {
  return focal_term(logit, label, gamma, w_pos, w_neg).value;
}

Var loss_focal(const Var& logits, const std::vector<bool>& labels, double gamma, double w_pos, double w_neg) {
  if (logits.cols() != 1 || logits.rows() != static_cast<Index>(labels.size()) || labels.empty()) {
    throw std::invalid_argument("loss_focal: expected batch x 1 logits with one label each");
  }
  const Index B = logits.rows();
  Matrix grad(B, 1);
  double total = 0.0;
  for (Index b = 0; b < B; ++b) {
    const FocalTerm f = focal_term(logits.value()(b, 0), labels[static_cast<std::size_t>(b)], gamma, w_pos, w_neg);
    total += f.value;
    grad(b, 0) = f.grad / static_cast<double>(B);
  }
  const int il = logits.id();
  return logits.tape().record(scalar(total / static_cast<double>(B)), {logits},
                              [il, grad](Tape& t, const Matrix& g) { t.accumulate(il, grad * g(0, 0)); });
}

Var loss_phase(const Var& logits, const std::vector<Index>& classes) {
  if (logits.cols() != kPhaseCount) throw std::invalid_argument("loss_phase: expected four logits");
  return ag::softmax_cross_entropy(logits, classes);
}

Var loss_recon(const Var& x_hat, const Matrix& x) {
  if (x_hat.rows() != x.rows() || x_hat.cols() != x.cols()) throw std::invalid_argument("loss_recon: shape mismatch");
  const double n = static_cast<double>(x.size());
  const int ix = x_hat.id();
  return x_hat.tape().record(scalar((x_hat.value() - x).squaredNorm() / n), {x_hat}, [ix, x, n](Tape& t, const Matrix& g) {
    t.accumulate(ix, (t.value(ix) - x) * (2.0 * g(0, 0) / n));
  });
}

Var loss_smooth(const Var& y_cont, int horizon) {
  if (horizon < 2 || y_cont.cols() % horizon != 0) throw std::invalid_argument("loss_smooth: bad horizon");
  const Index B = y_cont.rows(), V = y_cont.cols() / horizon;
  const double n = static_cast<double>(B * V * (horizon - 1));
  const Matrix& a = y_cont.value();
  double total = 0.0;
  for (Index b = 0; b < B; ++b) {
    for (Index v = 0; v < V; ++v) {
      for (int k = 1; k < horizon; ++k) {
        const double d = a(b, v * horizon + k) - a(b, v * horizon + k - 1);
        total += d * d;
      }
    }
  }
  const int iy = y_cont.id();
  return y_cont.tape().record(scalar(total / n), {y_cont}, [iy, V, horizon, n](Tape& t, const Matrix& g) {
    const Matrix& a = t.value(iy);
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    const double s = 2.0 * g(0, 0) / n;
    for (Index b = 0; b < a.rows(); ++b) {
      for (Index v = 0; v < V; ++v) {
        for (int k = 1; k < horizon; ++k) {
          const Index j = v * horizon + k;
          const double diff = a(b, j) - a(b, j - 1);
          d(b, j) += s * diff;
          d(b, j - 1) -= s * diff;
        }
      }
    }
    t.accumulate(iy, d);
  });
}

Var loss_mono(const Var& y_cont, const Matrix& mean, const Matrix& scale, double margin, int horizon) {
  const Index B = y_cont.rows();
  if (y_cont.cols() < channels::kContinuousTargets * horizon) throw std::invalid_argument("loss_mono: too few columns");
  if (mean.rows() != B || scale.rows() != B || mean.cols() < channels::kContinuousTargets ||
      scale.cols() < channels::kContinuousTargets) {
    throw std::invalid_argument("loss_mono: statistics must be batch x 21");
  }
  const double n = static_cast<double>(B * horizon);
  const Matrix& a = y_cont.value();
  double total = 0.0;
  for (auto [lo, up] : channels::kTemperaturePairs) {
    for (Index b = 0; b < B; ++b) {
      for (int k = 0; k < horizon; ++k) {
        const double tl = a(b, pred_column(lo, k, horizon)) * scale(b, lo) + mean(b, lo);
        const double tu = a(b, pred_column(up, k, horizon)) * scale(b, up) + mean(b, up);
        const double h = std::max(0.0, tu - tl + margin);
        total += h * h / n;
      }
    }
  }
  const int iy = y_cont.id();
  return y_cont.tape().record(scalar(total), {y_cont}, [iy, mean, scale, margin, horizon, n](Tape& t, const Matrix& g) {
    const Matrix& a = t.value(iy);
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (auto [lo, up] : channels::kTemperaturePairs) {
      for (Index b = 0; b < a.rows(); ++b) {
        for (int k = 0; k < horizon; ++k) {
          const Index jl = pred_column(lo, k, horizon), ju = pred_column(up, k, horizon);
          const double tl = a(b, jl) * scale(b, lo) + mean(b, lo);
          const double tu = a(b, ju) * scale(b, up) + mean(b, up);
          const double h = std::max(0.0, tu - tl + margin);
          if (h == 0.0) continue;
          const double s = 2.0 * h * g(0, 0) / n;
          d(b, ju) += s * scale(b, up);
          d(b, jl) -= s * scale(b, lo);
        }
      }
    }
    t.accumulate(iy, d);
  });
}

Var loss_mono(const Var& y_cont, double margin, int horizon) {
  const Index B = y_cont.rows();
  return loss_mono(y_cont, Matrix::Zero(B, channels::kContinuousTargets), Matrix::Ones(B, channels::kContinuousTargets),
                   margin, horizon);
}

double loss_total(const LossComponents& c, const LossWeights& w) {
  return w.w_pred * c.pred + w.w_class * (c.focal + c.phase) + w.w_recon * c.recon +
         w.w_phys * (w.lambda_smooth * c.smooth + w.lambda_mono * c.mono);
}

Var loss_total(Tape& tape, const LossTerms& terms, const LossWeights& w) {
  std::vector<Var> parts;
  auto add = [&](const Var& v, double weight) {
    if (weight != 0.0 && v.valid()) parts.push_back(ag::scale(v, weight));
  };
  add(terms.pred, w.w_pred);
  add(terms.focal, w.w_class);
  add(terms.phase, w.w_class);
  add(terms.recon, w.w_recon);
  add(terms.smooth, w.w_phys * w.lambda_smooth);
  add(terms.mono, w.w_phys * w.lambda_mono);
  if (parts.empty()) return tape.constant(Matrix::Zero(1, 1));
  return ag::sum(parts);
}

LossComponents values_of(const LossTerms& terms) {
  auto v = [](const Var& x) { return x.valid() ? x.scalar() : 0.0; };
  return {v(terms.pred), v(terms.focal), v(terms.phase), v(terms.recon), v(terms.smooth), v(terms.mono)};
}

}  // namespace utopya
