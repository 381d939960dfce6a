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

#include <vector>

namespace utopya::ag {

// Elementwise arithmetic. Shapes must match exactly.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var sum(const std::vector<Var>& terms);

// Broadcasts: `row` is 1 x cols, `col` is rows x 1.
Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var mul_col(const Var& a, const Var& col);
Var div_col(const Var& a, const Var& col);

Var matmul(const Var& a, const Var& b);
// a * b^T; `b` is stored out x in, like a dense layer weight.
Var matmul_nt(const Var& a, const Var& b);
// x * w^T + bias (bias may be invalid for no bias).
Var linear(const Var& x, const Var& w, const Var& bias);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var square(const Var& a);

Var sum_all(const Var& a);
Var mean_all(const Var& a);
// rows x 1 vector of row sums.
Var row_sum(const Var& a);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Index start, Index count);
Var slice_rows(const Var& a, Index start, Index count);

// Mean over consecutive blocks of `group` rows: (n*group) x c -> n x c.
Var group_mean_rows(const Var& a, Index group);
// Mean over row segments [offsets[i], offsets[i+1]).
Var segment_mean_rows(const Var& a, const std::vector<Index>& offsets);
Var gather_rows(const Var& a, const std::vector<Index>& index);
// Every row of `a` repeated `times` consecutively.
Var repeat_rows(const Var& a, Index times);
// Row i takes a(i) where mask[i] else b(i); b may be 1 x c (broadcast).
Var select_rows(const std::vector<bool>& mask, const Var& a, const Var& b);

// Per-sequence causal taps for dilated convolution. Input is (n*seq) x c;
// output is (n*seq) x (taps*c) whose j-th column block holds the input
// shifted forward by j*dilation steps with zero fill.
Var causal_taps(const Var& a, Index seq_len, Index dilation, Index taps);

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);
Var softmax_rows(const Var& a);
// Mean softmax cross-entropy of each row against its target column.
Var softmax_cross_entropy(const Var& logits, const std::vector<Index>& targets);
// Rows scaled to unit Euclidean norm (eps guards the zero row).
Var l2_normalize_rows(const Var& a, double eps = 1e-12);
Var dropout(const Var& a, double p, Rng& rng, bool training);

// Weight normalisation per output row: w_r = g_r * v_r / ||v_r||.
Var weight_norm_rows(const Var& v, const Var& g);

// Channels-last 2-D feature maps: rows enumerate (sample, y, x), columns are
// channels. `w` is cout x (9 * cin) with tap-major layout.
Var conv2d_3x3(const Var& x, const Var& w, const Var& bias, Index batch, Index height, Index width);
Var maxpool2x2(const Var& x, Index batch, Index height, Index width);
// Mean over all pixels of each sample: (batch*h*w) x c -> batch x c.
inline Var global_avg_pool(const Var& x, Index pixels_per_sample) { return group_mean_rows(x, pixels_per_sample); }

// Per-column batch normalisation over rows. In training mode the batch
// statistics are used and the running buffers are updated in place.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Parameter& running_mean,
               Parameter& running_var, bool training, double momentum = 0.1, double eps = 1e-5);

}  // namespace utopya::ag
