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

#include "utopya/baselines.hpp"

#include "utopya/scoring.hpp"
#include "utopya/trainer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace utopya::baselines {

Eigen::RowVectorXd summary_features(const Matrix& x) {
  if (x.cols() != channels::kInputs || x.rows() < 2) throw std::invalid_argument("summary_features: window shape");
  const auto n = static_cast<double>(x.rows());
  const double t_mean = (n - 1.0) / 2.0;
  double t_ss = 0.0;
  for (Index t = 0; t < x.rows(); ++t) t_ss += (static_cast<double>(t) - t_mean) * (static_cast<double>(t) - t_mean);
  Eigen::RowVectorXd f(kFeatureCount);
  for (Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    const double mean = col.mean();
    double ss = 0.0, cross = 0.0;
    for (Index t = 0; t < x.rows(); ++t) {
      const double d = col(t) - mean;
      ss += d * d;
      cross += (static_cast<double>(t) - t_mean) * d;
    }
    f(c * kStatsPerChannel + 0) = mean;
    f(c * kStatsPerChannel + 1) = std::sqrt(ss / n);
    f(c * kStatsPerChannel + 2) = col.minCoeff();
    f(c * kStatsPerChannel + 3) = col.maxCoeff();
    f(c * kStatsPerChannel + 4) = cross / t_ss;
  }
  return f;
}

Matrix summary_matrix(const std::vector<const Matrix*>& windows) {
  Matrix out(static_cast<Index>(windows.size()), kFeatureCount);
  for (std::size_t i = 0; i < windows.size(); ++i) out.row(static_cast<Index>(i)) = summary_features(*windows[i]);
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("standardizer: need at least two rows");
  Standardizer s;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Index c = 0; c < x.cols(); ++c) {
    if (sd(c) > 1e-12) s.keep.push_back(c);
  }
  if (s.keep.empty()) throw std::invalid_argument("standardizer: every feature is constant");
  s.mean.resize(static_cast<Index>(s.keep.size()));
  s.scale.resize(static_cast<Index>(s.keep.size()));
  for (std::size_t i = 0; i < s.keep.size(); ++i) {
    s.mean(static_cast<Index>(i)) = mean(s.keep[i]);
    s.scale(static_cast<Index>(i)) = sd(s.keep[i]);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto j = static_cast<Index>(i);
    out.col(j) = (x.col(keep[i]).array() - mean(j)) / scale(j);
  }
  return out;
}

PcaMonitor::PcaMonitor(const Matrix& train, double var_keep) : std_(Standardizer::fit(train)) {
  const Matrix z = std_.apply(train);
  const Matrix cov = z.transpose() * z / static_cast<double>(z.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Index d = cov.rows();
  Eigen::VectorXd ev = es.eigenvalues().reverse().cwiseMax(0.0);
  const Matrix vecs = es.eigenvectors().rowwise().reverse();
  ratio_ = ev / ev.sum();
  double cum = 0.0;
  k_ = static_cast<int>(d);
  for (Index j = 0; j < d; ++j) {
    cum += ratio_(j);
    if (cum >= var_keep - 1e-12) {
      k_ = static_cast<int>(j + 1);
      break;
    }
  }
  loadings_ = vecs.leftCols(k_);
  eig_ = ev.head(k_);
  t2_q99_ = std::max(percentile(t2(train), 0.99), 1e-12);
  spe_q99_ = std::max(percentile(spe(train), 0.99), 1e-12);
}

std::vector<double> PcaMonitor::t2(const Matrix& x) const {
  const Matrix scores = std_.apply(x) * loadings_;
  std::vector<double> out(static_cast<std::size_t>(x.rows()), 0.0);
  for (Index i = 0; i < scores.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < scores.cols(); ++j) {
      if (eig_(j) > 1e-12) s += scores(i, j) * scores(i, j) / eig_(j);
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

std::vector<double> PcaMonitor::spe(const Matrix& x) const {
  const Matrix z = std_.apply(x);
  const Matrix resid = z - (z * loadings_) * loadings_.transpose();
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < resid.rows(); ++i) out[static_cast<std::size_t>(i)] = resid.row(i).squaredNorm();
  return out;
}

std::vector<double> PcaMonitor::score(const Matrix& x) const {
  auto a = t2(x);
  const auto b = spe(x);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] / t2_q99_ + b[i] / spe_q99_;
  return a;
}

double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n < 2.5) return 1.0;
  constexpr double kEuler = 0.5772156649015329;
  return 2.0 * (std::log(n - 1.0) + kEuler) - 2.0 * (n - 1.0) / n;
}

IsolationForest::IsolationForest(const Matrix& train, int trees, int subsample, double contamination,
                                 std::uint64_t seed) {
  if (train.rows() < 2 || trees < 1) throw std::invalid_argument("isolation forest: need data and trees");
  std::mt19937_64 rng(seed);
  const int psi = std::min<int>(subsample, static_cast<int>(train.rows()));
  c_ = average_path_length(psi);
  const int limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
  std::vector<Index> all(static_cast<std::size_t>(train.rows()));
  std::iota(all.begin(), all.end(), 0);
  trees_.resize(static_cast<std::size_t>(trees));
  for (auto& t : trees_) {
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<Index> rows(all.begin(), all.begin() + psi);
    build(t, train, rows, 0, limit, rng);
  }
  threshold_ = percentile(score(train), 1.0 - contamination);
}

int IsolationForest::build(Tree& t, const Matrix& x, std::vector<Index>& rows, int depth, int limit,
                           std::mt19937_64& rng) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.push_back({});
  t.nodes[static_cast<std::size_t>(id)].size = static_cast<int>(rows.size());
  if (depth >= limit || rows.size() <= 1) return id;
  std::vector<int> candidates;
  std::vector<std::pair<double, double>> range(static_cast<std::size_t>(x.cols()));
  for (Index c = 0; c < x.cols(); ++c) {
    double lo = x(rows[0], c), hi = lo;
    for (Index r : rows) {
      lo = std::min(lo, x(r, c));
      hi = std::max(hi, x(r, c));
    }
    range[static_cast<std::size_t>(c)] = {lo, hi};
    if (hi > lo) candidates.push_back(static_cast<int>(c));
  }
  if (candidates.empty()) return id;
  const int f = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  const auto [lo, hi] = range[static_cast<std::size_t>(f)];
  const double split = std::uniform_real_distribution<double>(lo, hi)(rng);
  std::vector<Index> left, right;
  for (Index r : rows) (x(r, f) < split ? left : right).push_back(r);
  if (left.empty() || right.empty()) return id;
  const int l = build(t, x, left, depth + 1, limit, rng);
  const int r = build(t, x, right, depth + 1, limit, rng);
  Node& n = t.nodes[static_cast<std::size_t>(id)];
  n.feature = f;
  n.split = split;
  n.left = l;
  n.right = r;
  return id;
}

double IsolationForest::path_length(const Eigen::RowVectorXd& x) const {
  double total = 0.0;
  for (const auto& t : trees_) {
    int node = 0, depth = 0;
    while (t.nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& n = t.nodes[static_cast<std::size_t>(node)];
      node = x(n.feature) < n.split ? n.left : n.right;
      ++depth;
    }
    total += depth + average_path_length(t.nodes[static_cast<std::size_t>(node)].size);
  }
  return total / static_cast<double>(trees_.size());
}

std::vector<double> IsolationForest::score(const Matrix& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = std::pow(2.0, -path_length(x.row(i)) / c_);
  }
  return out;
}

namespace {

template <class BatchLoss>
std::vector<double> train_loop(ag::ParamStore& store, std::size_t n, const NetTraining& cfg, BatchLoss&& loss) {
  std::mt19937_64 rng(cfg.seed);
  AdamW opt(0.9, 0.999, 1e-8, cfg.weight_decay);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i0 = 0; i0 < n; i0 += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t i1 = std::min(n, i0 + static_cast<std::size_t>(cfg.batch));
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(i0),
                                   order.begin() + static_cast<std::ptrdiff_t>(i1));
      store.zero_grad();
      ag::Tape tape;
      Var l = loss(tape, idx);
      tape.backward(l);
      auto params = store.trainable();
      clip_grad_norm(params, 1.0);
      opt.step(params, cfg.lr);
      sum += l.scalar() * static_cast<double>(idx.size());
      count += idx.size();
    }
    history.push_back(count ? sum / static_cast<double>(count) : 0.0);
  }
  return history;
}

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(idx[i]));
  return out;
}

}  // namespace

FfAutoencoder::FfAutoencoder(int inputs, const std::vector<int>& dims, std::uint64_t seed) {
  ag::Rng rng(seed);
  std::vector<int> widths{inputs};
  widths.insert(widths.end(), dims.begin(), dims.end());
  for (auto it = dims.rbegin() + 1; it != dims.rend(); ++it) widths.push_back(*it);
  widths.push_back(inputs);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(store_, "ae.layer" + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

Var FfAutoencoder::forward(ag::Tape& tape, const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](tape, h);
    if (i + 1 < layers_.size()) h = ag::relu(h);
  }
  return h;
}

Matrix FfAutoencoder::reconstruct(const Matrix& x) const {
  ag::Tape tape;
  tape.set_grad_enabled(false);
  return forward(tape, tape.constant(x)).value();
}

std::vector<double> FfAutoencoder::score(const Matrix& x) const {
  const Matrix r = reconstruct(x);
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = (r.row(i) - x.row(i)).squaredNorm() / static_cast<double>(x.cols());
  return out;
}

std::vector<double> FfAutoencoder::train(const Matrix& x, const NetTraining& cfg) {
  return train_loop(store_, static_cast<std::size_t>(x.rows()), cfg, [&](ag::Tape& tape, const std::vector<std::size_t>& idx) {
    const Matrix xb = rows_of(x, idx);
    Var diff = ag::sub(forward(tape, tape.constant(xb)), tape.constant(xb));
    return ag::mean_all(ag::square(diff));
  });
}

LstmCell::LstmCell(ag::ParamStore& store, const std::string& name, int inputs, int hidden_size, ag::Rng& rng)
    : gates(store, name + ".gates", inputs + hidden_size, 4 * hidden_size, rng), hidden(hidden_size) {
  // Forget-gate bias of one keeps early gradients flowing through the cell.
  gates.bias->value.block(0, hidden_size, 1, hidden_size).setOnes();
}

std::pair<Var, Var> LstmCell::step(ag::Tape& tape, const Var& x, const Var& h, const Var& c) const {
  Var z = gates(tape, ag::concat_cols({x, h}));
  Var i = ag::sigmoid(ag::slice_cols(z, 0, hidden));
  Var f = ag::sigmoid(ag::slice_cols(z, hidden, hidden));
  Var g = ag::tanh(ag::slice_cols(z, 2 * hidden, hidden));
  Var o = ag::sigmoid(ag::slice_cols(z, 3 * hidden, hidden));
  Var c_next = ag::add(ag::mul(f, c), ag::mul(i, g));
  Var h_next = ag::mul(o, ag::tanh(c_next));
  return {h_next, c_next};
}

LstmAutoencoder::LstmAutoencoder(int inputs, int hidden, int layers, std::uint64_t seed) : hidden_(hidden) {
  ag::Rng rng(seed);
  for (int l = 0; l < layers; ++l) {
    encoder_.emplace_back(store_, "lstm.enc" + std::to_string(l), l == 0 ? inputs : hidden, hidden, rng);
  }
  for (int l = 0; l < layers; ++l) {
    decoder_.emplace_back(store_, "lstm.dec" + std::to_string(l), hidden, hidden, rng);
  }
  out_ = nn::Linear(store_, "lstm.out", hidden, inputs, rng);
}

Var LstmAutoencoder::forward(ag::Tape& tape, const Matrix& x, Index seq) const {
  const Index B = x.rows() / seq;
  const Index in = x.cols();
  const Var zero = tape.constant(Matrix::Zero(B, hidden_));
  std::vector<Var> h(encoder_.size(), zero), c(encoder_.size(), zero);
  for (Index t = 0; t < seq; ++t) {
    Matrix xt(B, in);
    for (Index b = 0; b < B; ++b) xt.row(b) = x.row(b * seq + t);
    Var input = tape.constant(std::move(xt));
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      std::tie(h[l], c[l]) = encoder_[l].step(tape, input, h[l], c[l]);
      input = h[l];
    }
  }
  const Var latent = h.back();
  std::vector<Var> dh(decoder_.size(), zero), dc(decoder_.size(), zero);
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(seq));
  for (Index t = 0; t < seq; ++t) {
    Var input = latent;
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      std::tie(dh[l], dc[l]) = decoder_[l].step(tape, input, dh[l], dc[l]);
      input = dh[l];
    }
    steps.push_back(out_(tape, input));
  }
  // Steps arrive time-major; reorder to the sample-major input layout.
  std::vector<Index> order(static_cast<std::size_t>(B * seq));
  for (Index b = 0; b < B; ++b) {
    for (Index t = 0; t < seq; ++t) order[static_cast<std::size_t>(b * seq + t)] = t * B + b;
  }
  return ag::gather_rows(ag::concat_rows(steps), order);
}

namespace {

Matrix stack_windows(const std::vector<const Matrix*>& windows, const std::vector<std::size_t>& idx) {
  const Index seq = windows.front()->rows();
  Matrix out(static_cast<Index>(idx.size()) * seq, windows.front()->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.middleRows(static_cast<Index>(i) * seq, seq) = *windows[idx[i]];
  return out;
}

}  // namespace

std::vector<double> LstmAutoencoder::score(const std::vector<const Matrix*>& windows, int batch) const {
  std::vector<double> out;
  if (windows.empty()) return out;
  const Index seq = windows.front()->rows();
  for (std::size_t i0 = 0; i0 < windows.size(); i0 += static_cast<std::size_t>(batch)) {
    const std::size_t i1 = std::min(windows.size(), i0 + static_cast<std::size_t>(batch));
    std::vector<std::size_t> idx(i1 - i0);
    std::iota(idx.begin(), idx.end(), i0);
    const Matrix x = stack_windows(windows, idx);
    ag::Tape tape;
    tape.set_grad_enabled(false);
    const Matrix r = forward(tape, x, seq).value();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto rows = static_cast<Index>(i) * seq;
      out.push_back((r.middleRows(rows, seq) - x.middleRows(rows, seq)).array().square().mean());
    }
  }
  return out;
}

std::vector<double> LstmAutoencoder::train(const std::vector<const Matrix*>& windows, const NetTraining& cfg) {
  if (windows.empty()) throw std::invalid_argument("lstm autoencoder: no training windows");
  const Index seq = windows.front()->rows();
  return train_loop(store_, windows.size(), cfg, [&](ag::Tape& tape, const std::vector<std::size_t>& idx) {
    const Matrix x = stack_windows(windows, idx);
    return ag::mean_all(ag::square(ag::sub(forward(tape, x, seq), tape.constant(x))));
  });
}

std::string method_name(Method m) {
  switch (m) {
    case Method::pca: return "pca";
    case Method::iforest: return "iforest";
    case Method::ae: return "ae";
    case Method::lstm: return "lstm";
  }
  return "pca";
}

Method parse_method(std::string_view s) {
  if (s == "pca") return Method::pca;
  if (s == "iforest") return Method::iforest;
  if (s == "ae") return Method::ae;
  if (s == "lstm") return Method::lstm;
  throw std::invalid_argument("unknown baseline method: " + std::string(s));
}

std::vector<double> run_baseline(Method method, const std::vector<const WindowSample*>& train,
                                 const std::vector<const WindowSample*>& eval, const BaselineConfig& cfg) {
  std::vector<const Matrix*> tr, ev;
  for (const auto* w : train) {
    if (!cfg.normal_only || !w->anomaly_label) tr.push_back(&w->x);
  }
  for (const auto* w : eval) ev.push_back(&w->x);
  if (tr.size() < 2) throw std::invalid_argument("baseline: need at least two training windows");
  switch (method) {
    case Method::pca: return PcaMonitor(summary_matrix(tr), cfg.var_keep).score(summary_matrix(ev));
    case Method::iforest:
      return IsolationForest(summary_matrix(tr), cfg.trees, cfg.subsample, cfg.contamination, cfg.seed)
          .score(summary_matrix(ev));
    case Method::ae: {
      const Matrix ftr = summary_matrix(tr);
      const Standardizer s = Standardizer::fit(ftr);
      FfAutoencoder net(static_cast<int>(s.keep.size()), cfg.ae_dims, cfg.seed);
      NetTraining t = cfg.ae;
      t.seed = cfg.seed;
      net.train(s.apply(ftr), t);
      return net.score(s.apply(summary_matrix(ev)));
    }
    case Method::lstm: {
      LstmAutoencoder net(channels::kInputs, cfg.lstm_hidden, cfg.lstm_layers, cfg.seed);
      NetTraining t = cfg.lstm;
      t.seed = cfg.seed;
      net.train(tr, t);
      return net.score(ev);
    }
  }
  return {};
}

}  // namespace utopya::baselines
