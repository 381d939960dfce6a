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

#include "utopya/heads.hpp"

#include <array>
#include <utility>
#include <vector>

namespace utopya {

struct LossWeights {
  double w_pred = 0.1;
  double w_class = 2.0;
  double w_recon = 0.0;
  double w_phys = 0.5;
  double lambda_smooth = 1.0;
  double lambda_mono = 0.5;
  double focal_gamma = 2.0;
  double w_plus = 6.0;
  double margin = 0.0;
};

inline constexpr double kProbClamp = 1e-7;

// Batch-mean prediction loss: MSE over the continuous block plus BCE with
// logits over the binary block. y_hat and y are batch x (25 * horizon).
Var loss_pred(const Var& y_hat, const Matrix& y, int horizon = kHorizon);

// Focal loss on anomaly logits (batch x 1), averaged over the batch.
Var loss_focal(const Var& logits, const std::vector<bool>& labels, double gamma = 2.0, double w_pos = 6.0,
               double w_neg = 1.0);
double focal_value(double logit, bool label, double gamma = 2.0, double w_pos = 6.0, double w_neg = 1.0);

// Softmax cross-entropy over the four phase logits.
Var loss_phase(const Var& logits, const std::vector<Index>& classes);

// Mean squared error over every cell.
Var loss_recon(const Var& x_hat, const Matrix& x);

// Mean squared first difference along the horizon. y_cont is
// batch x (variables * horizon) in the variable-major layout.
Var loss_smooth(const Var& y_cont, int horizon = kHorizon);

// Squared hinge on inverted column temperatures summed over the ordered
// pairs; each pair is averaged over batch and horizon. Predictions are
// mapped back to physical units with per-sample mean/scale (batch x 21)
// before comparison.
Var loss_mono(const Var& y_cont, const Matrix& mean, const Matrix& scale, double margin = 0.0,
              int horizon = kHorizon);
// Same on predictions that are already in physical units.
Var loss_mono(const Var& y_cont, double margin = 0.0, int horizon = kHorizon);

struct LossComponents {
  double pred = 0.0;
  double focal = 0.0;
  double phase = 0.0;
  double recon = 0.0;
  double smooth = 0.0;
  double mono = 0.0;
};

double loss_total(const LossComponents& c, const LossWeights& w);

struct LossTerms {
  Var pred, focal, phase, recon, smooth, mono;  // recon may be invalid
};
// Weighted differentiable total; terms with zero weight are skipped.
Var loss_total(Tape& tape, const LossTerms& terms, const LossWeights& w);
LossComponents values_of(const LossTerms& terms);

}  // namespace utopya
