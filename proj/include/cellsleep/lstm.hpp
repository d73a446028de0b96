#pragma once

// Stacked gated recurrent regressor with a linear head on the last hidden
// state of the top cell. Gate rows are laid out [input, forget, cell, output].
// Batches are a sequence of row-major matrices, one row per sample.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cellsleep/rng.hpp"

namespace cellsleep {

template <class Scalar = double>
struct Lstm {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Cell {
    Mat w;  // 4H x in
    Mat u;  // 4H x H
    Vec b;  // 4H
  };

  int input_dim = 0;
  std::vector<int> hidden;  // per stacked cell
  std::vector<Cell> cells;
  Mat head_w;  // 1 x H_top
  Vec head_b;  // 1

  static Lstm zeros(int input_dim, const std::vector<int>& hidden) {
    if (input_dim <= 0 || hidden.empty()) throw std::invalid_argument("lstm: bad dims");
    Lstm m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    int in = input_dim;
    for (int h : hidden) {
      if (h <= 0) throw std::invalid_argument("lstm: hidden sizes must be positive");
      m.cells.push_back(Cell{Mat::Zero(4 * h, in), Mat::Zero(4 * h, h), Vec::Zero(4 * h)});
      in = h;
    }
    m.head_w = Mat::Zero(1, hidden.back());
    m.head_b = Vec::Zero(1);
    return m;
  }

  // Glorot-uniform matrices, zero biases except a unit forget-gate bias.
  static Lstm glorot(int input_dim, const std::vector<int>& hidden, Rng& rng) {
    Lstm m = zeros(input_dim, hidden);
    auto fill = [&](Mat& w) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * limit);
    };
    for (std::size_t l = 0; l < m.cells.size(); ++l) {
      fill(m.cells[l].w);
      fill(m.cells[l].u);
      m.cells[l].b.segment(hidden[l], hidden[l]).setOnes();
    }
    fill(m.head_w);
    return m;
  }

  std::vector<std::span<Scalar>> tensors() {
    std::vector<std::span<Scalar>> out;
    for (auto& c : cells) {
      out.emplace_back(c.w.data(), static_cast<std::size_t>(c.w.size()));
      out.emplace_back(c.u.data(), static_cast<std::size_t>(c.u.size()));
      out.emplace_back(c.b.data(), static_cast<std::size_t>(c.b.size()));
    }
    out.emplace_back(head_w.data(), static_cast<std::size_t>(head_w.size()));
    out.emplace_back(head_b.data(), static_cast<std::size_t>(head_b.size()));
    return out;
  }
  std::vector<std::span<const Scalar>> tensors() const {
    std::vector<std::span<const Scalar>> out;
    for (const auto& c : cells) {
      out.emplace_back(c.w.data(), static_cast<std::size_t>(c.w.size()));
      out.emplace_back(c.u.data(), static_cast<std::size_t>(c.u.size()));
      out.emplace_back(c.b.data(), static_cast<std::size_t>(c.b.size()));
    }
    out.emplace_back(head_w.data(), static_cast<std::size_t>(head_w.size()));
    out.emplace_back(head_b.data(), static_cast<std::size_t>(head_b.size()));
    return out;
  }

  bool shapes_match(const Lstm& o) const { return input_dim == o.input_dim && hidden == o.hidden; }

  bool all_finite() const {
    for (const auto& t : tensors())
      for (Scalar v : t)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

template <class Scalar>
using Sequence = std::vector<typename Lstm<Scalar>::Mat>;  // one batch matrix per time step

namespace detail {

template <class Scalar>
struct LstmStepCache {
  typename Lstm<Scalar>::Mat i, f, g, o, c, tanh_c, h;
};

template <class Scalar>
struct LstmTape {
  std::vector<std::vector<LstmStepCache<Scalar>>> steps;  // [layer][time]
};

template <class Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

}  // namespace detail

template <class Scalar>
typename Lstm<Scalar>::Mat lstm_forward_batch(const Lstm<Scalar>& p, const Sequence<Scalar>& seq,
                                              detail::LstmTape<Scalar>* tape = nullptr) {
  using Mat = typename Lstm<Scalar>::Mat;
  if (seq.empty()) throw std::invalid_argument("lstm_forward: empty window");
  const Eigen::Index n = seq.front().rows();
  for (const auto& x : seq)
    if (x.cols() != p.input_dim || x.rows() != n) throw std::invalid_argument("lstm_forward: input shape mismatch");

  if (tape) tape->steps.assign(p.cells.size(), {});
  const Sequence<Scalar>* inputs = &seq;
  Sequence<Scalar> layer_out;
  for (std::size_t l = 0; l < p.cells.size(); ++l) {
    const auto& cell = p.cells[l];
    const int hsz = p.hidden[l];
    Mat h = Mat::Zero(n, hsz);
    Mat c = Mat::Zero(n, hsz);
    Sequence<Scalar> outs;
    outs.reserve(inputs->size());
    for (const auto& x : *inputs) {
      Mat gates = x * cell.w.transpose();
      gates.noalias() += h * cell.u.transpose();
      gates.rowwise() += cell.b.transpose();
      detail::LstmStepCache<Scalar> s;
      s.i = gates.leftCols(hsz).unaryExpr([](Scalar v) { return detail::sigmoid(v); });
      s.f = gates.middleCols(hsz, hsz).unaryExpr([](Scalar v) { return detail::sigmoid(v); });
      s.g = gates.middleCols(2 * hsz, hsz).array().tanh().matrix();
      s.o = gates.rightCols(hsz).unaryExpr([](Scalar v) { return detail::sigmoid(v); });
      c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
      s.c = c;
      s.tanh_c = c.array().tanh().matrix();
      h = s.o.cwiseProduct(s.tanh_c);
      s.h = h;
      outs.push_back(h);
      if (tape) tape->steps[l].push_back(std::move(s));
    }
    layer_out = std::move(outs);
    inputs = &layer_out;
  }
  Mat y = layer_out.back() * p.head_w.transpose();
  y.array() += p.head_b(0);
  return y;
}

template <class Scalar>
Scalar lstm_forward(const Lstm<Scalar>& p, const std::vector<std::vector<Scalar>>& window) {
  if (window.empty()) throw std::invalid_argument("lstm_forward: empty window");
  Sequence<Scalar> seq;
  for (const auto& step : window) {
    if (static_cast<int>(step.size()) != p.input_dim) throw std::invalid_argument("lstm_forward: input size mismatch");
    typename Lstm<Scalar>::Mat row(1, p.input_dim);
    for (int k = 0; k < p.input_dim; ++k) row(0, k) = step[k];
    seq.push_back(std::move(row));
  }
  return lstm_forward_batch(p, seq)(0, 0);
}

// Mean squared error over the batch and its full backpropagation-through-time gradient.
template <class Scalar>
Scalar lstm_loss_gradient(const Lstm<Scalar>& p, const Sequence<Scalar>& seq, std::span<const Scalar> targets,
                          Lstm<Scalar>* grad) {
  using Mat = typename Lstm<Scalar>::Mat;
  detail::LstmTape<Scalar> tape;
  const Mat y = lstm_forward_batch(p, seq, grad ? &tape : nullptr);
  const Eigen::Index n = y.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n) throw std::invalid_argument("lstm: target count mismatch");

  Mat dy(n, 1);
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar e = y(i, 0) - targets[i];
    loss += e * e;
    dy(i, 0) = Scalar(2) * e / static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);
  if (!grad) return loss;

  if (!grad->shapes_match(p)) *grad = Lstm<Scalar>::zeros(p.input_dim, p.hidden);
  const std::size_t steps = seq.size();
  const std::size_t top = p.cells.size() - 1;

  grad->head_w.noalias() = dy.transpose() * tape.steps[top].back().h;
  grad->head_b(0) = dy.sum();

  // Upstream gradient w.r.t. each layer's hidden output at every step.
  std::vector<Mat> dh_above(steps, Mat::Zero(n, p.hidden[top]));
  dh_above.back() = dy * p.head_w;

  for (std::size_t l = p.cells.size(); l-- > 0;) {
    const auto& cell = p.cells[l];
    auto& g = grad->cells[l];
    g.w.setZero();
    g.u.setZero();
    g.b.setZero();
    const int hsz = p.hidden[l];
    const Sequence<Scalar>* inputs = nullptr;
    Sequence<Scalar> below_h;
    if (l == 0) {
      inputs = &seq;
    } else {
      for (const auto& s : tape.steps[l - 1]) below_h.push_back(s.h);
      inputs = &below_h;
    }
    std::vector<Mat> dx(steps);
    Mat dh_next = Mat::Zero(n, hsz);
    Mat dc_next = Mat::Zero(n, hsz);
    Mat dgates(n, 4 * hsz);
    for (std::size_t t = steps; t-- > 0;) {
      const auto& s = tape.steps[l][t];
      const Mat dh = dh_above[t] + dh_next;
      const Mat c_prev = t > 0 ? tape.steps[l][t - 1].c : Mat::Zero(n, hsz);
      const Mat h_prev = t > 0 ? tape.steps[l][t - 1].h : Mat::Zero(n, hsz);

      const auto tc = s.tanh_c.array();
      const Mat d_o = dh.cwiseProduct(s.tanh_c);
      const Mat dc = (dh.array() * s.o.array() * (Scalar(1) - tc * tc)).matrix() + dc_next;
      const Mat d_i = dc.cwiseProduct(s.g);
      const Mat d_g = dc.cwiseProduct(s.i);
      const Mat d_f = dc.cwiseProduct(c_prev);
      dc_next = dc.cwiseProduct(s.f);

      dgates.leftCols(hsz) = (d_i.array() * s.i.array() * (Scalar(1) - s.i.array())).matrix();
      dgates.middleCols(hsz, hsz) = (d_f.array() * s.f.array() * (Scalar(1) - s.f.array())).matrix();
      dgates.middleCols(2 * hsz, hsz) = (d_g.array() * (Scalar(1) - s.g.array() * s.g.array())).matrix();
      dgates.rightCols(hsz) = (d_o.array() * s.o.array() * (Scalar(1) - s.o.array())).matrix();

      g.w.noalias() += dgates.transpose() * (*inputs)[t];
      if (t > 0) g.u.noalias() += dgates.transpose() * h_prev;
      g.b += dgates.colwise().sum().transpose();
      dh_next = dgates * cell.u;
      if (l > 0) dx[t] = dgates * cell.w;
    }
    if (l > 0) dh_above = std::move(dx);
  }
  return loss;
}

template <class Scalar>
Lstm<Scalar> lstm_gradient(const Lstm<Scalar>& p, const std::vector<std::vector<Scalar>>& window, Scalar target) {
  if (window.empty()) throw std::invalid_argument("lstm_gradient: empty window");
  Sequence<Scalar> seq;
  for (const auto& step : window) {
    if (static_cast<int>(step.size()) != p.input_dim) throw std::invalid_argument("lstm_gradient: input size mismatch");
    typename Lstm<Scalar>::Mat row(1, p.input_dim);
    for (int k = 0; k < p.input_dim; ++k) {
      if (!std::isfinite(step[k])) throw std::invalid_argument("lstm_gradient: non-finite input");
      row(0, k) = step[k];
    }
    seq.push_back(std::move(row));
  }
  Lstm<Scalar> g = Lstm<Scalar>::zeros(p.input_dim, p.hidden);
  const Scalar t[1] = {target};
  lstm_loss_gradient(p, seq, std::span<const Scalar>(t, 1), &g);
  return g;
}

}  // namespace cellsleep
