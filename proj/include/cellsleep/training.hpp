#pragma once

// Adagrad and the mini-batch training loop shared by every estimator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cellsleep/lstm.hpp"
#include "cellsleep/mlp.hpp"
#include "cellsleep/rng.hpp"

namespace cellsleep {

template <class S>
Mlp<S> zeros_like(const Mlp<S>& m) {
  return Mlp<S>::zeros(m.dims);
}
template <class S>
Lstm<S> zeros_like(const Lstm<S>& m) {
  return Lstm<S>::zeros(m.input_dim, m.hidden);
}

template <class Model>
struct AdagradState {
  Model accum;
  double learning_rate = 0.001;
  double epsilon = 1e-8;

  static AdagradState for_model(const Model& m, double lr, double eps = 1e-8) {
    return AdagradState{zeros_like(m), lr, eps};
  }
};

template <class Model>
void adagrad_step(Model& params, const Model& grad, AdagradState<Model>& st) {
  auto p = params.tensors();
  auto g = grad.tensors();
  auto a = st.accum.tensors();
  if (p.size() != g.size() || p.size() != a.size()) throw std::invalid_argument("adagrad: shape mismatch");
  using S = std::remove_cvref_t<decltype(p[0][0])>;
  const S lr = static_cast<S>(st.learning_rate);
  const S eps = static_cast<S>(st.epsilon);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size() || p[k].size() != a[k].size()) throw std::invalid_argument("adagrad: shape mismatch");
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      a[k][i] += g[k][i] * g[k][i];
      p[k][i] -= lr * g[k][i] / (std::sqrt(a[k][i]) + eps);
    }
  }
}

struct TrainOptions {
  int epochs = 50;
  int batch_size = 64;
  int patience = 10;  // epochs without heldout improvement before stopping; <= 0 disables
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> heldout_loss;
  int best_epoch = -1;
  bool early_stopped = false;
};

// loss_fn(params, sample indices, grad-or-null) returns the batch mean loss and,
// when grad is non-null, writes the gradient of that mean into it. Heldout
// samples only ever reach loss_fn with a null gradient.
template <class Model, class LossFn>
TrainReport train(Model& params, std::span<const std::size_t> train_idx, std::span<const std::size_t> heldout_idx,
                  LossFn&& loss_fn, AdagradState<Model>& opt, const TrainOptions& options) {
  if (train_idx.empty()) throw std::invalid_argument("train: empty dataset");
  if (options.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  Rng rng(options.seed);
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  Model grad = zeros_like(params);
  Model best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  auto evaluate = [&](std::span<const std::size_t> idx) {
    double total = 0.0;
    const std::size_t bs = 1024;
    for (std::size_t s = 0; s < idx.size(); s += bs) {
      const std::size_t e = std::min(idx.size(), s + bs);
      total += static_cast<double>(loss_fn(params, idx.subspan(s, e - s), static_cast<Model*>(nullptr))) * (e - s);
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
  };

  TrainReport report;
  const std::size_t bs = static_cast<std::size_t>(options.batch_size);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double seen = 0.0;
    double total = 0.0;
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const std::size_t e = std::min(order.size(), s + bs);
      const double l = loss_fn(params, std::span<const std::size_t>(order).subspan(s, e - s), &grad);
      total += l * static_cast<double>(e - s);
      seen += static_cast<double>(e - s);
      adagrad_step(params, grad, opt);
    }
    report.train_loss.push_back(total / seen);
    const double monitored = heldout_idx.empty() ? report.train_loss.back() : evaluate(heldout_idx);
    report.heldout_loss.push_back(heldout_idx.empty() ? std::numeric_limits<double>::quiet_NaN() : monitored);
    if (monitored < best_loss) {
      best_loss = monitored;
      best = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (options.patience > 0 && ++since_best >= options.patience) {
      report.early_stopped = true;
      break;
    }
  }
  if (report.best_epoch >= 0) params = best;
  return report;
}

}  // namespace cellsleep
