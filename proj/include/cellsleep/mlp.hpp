#pragma once

// Fully connected regressor: rectified hidden layers, identity output, squared
// error. Forward and reverse passes operate on row-major batches (one sample
// per row).

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cellsleep/rng.hpp"

namespace cellsleep {

template <class Scalar = double>
struct Mlp {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<int> dims;  // input, hidden..., output
  std::vector<Mat> weights;  // layer l: dims[l+1] x dims[l]
  std::vector<Vec> biases;

  static Mlp zeros(const std::vector<int>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
    Mlp m;
    m.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      if (dims[l] <= 0 || dims[l + 1] <= 0) throw std::invalid_argument("mlp: dims must be positive");
      m.weights.push_back(Mat::Zero(dims[l + 1], dims[l]));
      m.biases.push_back(Vec::Zero(dims[l + 1]));
    }
    return m;
  }

  // Glorot-uniform weights, zero biases.
  static Mlp glorot(const std::vector<int>& dims, Rng& rng) {
    Mlp m = zeros(dims);
    for (auto& w : m.weights) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * limit);
    }
    return m;
  }

  std::size_t layers() const { return weights.size(); }
  int input_dim() const { return dims.front(); }

  std::vector<std::span<Scalar>> tensors() {
    std::vector<std::span<Scalar>> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.emplace_back(weights[l].data(), static_cast<std::size_t>(weights[l].size()));
      out.emplace_back(biases[l].data(), static_cast<std::size_t>(biases[l].size()));
    }
    return out;
  }
  std::vector<std::span<const Scalar>> tensors() const {
    std::vector<std::span<const Scalar>> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.emplace_back(weights[l].data(), static_cast<std::size_t>(weights[l].size()));
      out.emplace_back(biases[l].data(), static_cast<std::size_t>(biases[l].size()));
    }
    return out;
  }

  bool shapes_match(const Mlp& o) const {
    if (dims != o.dims || weights.size() != o.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (weights[l].rows() != o.weights[l].rows() || weights[l].cols() != o.weights[l].cols() ||
          biases[l].size() != o.biases[l].size())
        return false;
    return true;
  }

  bool all_finite() const {
    for (const auto& t : tensors())
      for (Scalar v : t)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

template <class Scalar>
struct MlpTape {
  std::vector<typename Mlp<Scalar>::Mat> activations;  // a_0 = input, a_L = output
};

template <class Scalar>
typename Mlp<Scalar>::Mat mlp_forward_batch(const Mlp<Scalar>& p, const typename Mlp<Scalar>::Mat& x,
                                            MlpTape<Scalar>* tape = nullptr) {
  using Mat = typename Mlp<Scalar>::Mat;
  if (x.cols() != p.input_dim()) throw std::invalid_argument("mlp_forward: input width does not match dims");
  Mat a = x;
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(a);
  }
  for (std::size_t l = 0; l < p.layers(); ++l) {
    Mat z = a * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    if (l + 1 < p.layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
    if (tape) tape->activations.push_back(a);
  }
  return a;
}

template <class Scalar>
Scalar mlp_forward(const Mlp<Scalar>& p, std::span<const Scalar> x) {
  if (static_cast<int>(x.size()) != p.input_dim()) throw std::invalid_argument("mlp_forward: input size mismatch");
  typename Mlp<Scalar>::Mat row(1, p.input_dim());
  for (int k = 0; k < p.input_dim(); ++k) row(0, k) = x[k];
  return mlp_forward_batch(p, row)(0, 0);
}

// Mean over the batch of (output - target)^2; grad receives the gradient of
// that mean (same shape as p).
template <class Scalar>
Scalar mlp_loss_gradient(const Mlp<Scalar>& p, const typename Mlp<Scalar>::Mat& x, std::span<const Scalar> targets,
                         Mlp<Scalar>* grad) {
  using Mat = typename Mlp<Scalar>::Mat;
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n) throw std::invalid_argument("mlp: target count mismatch");
  if (n == 0) throw std::invalid_argument("mlp: empty batch");
  MlpTape<Scalar> tape;
  const Mat out = mlp_forward_batch(p, x, grad ? &tape : nullptr);

  Mat delta(n, 1);
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar e = out(i, 0) - targets[i];
    loss += e * e;
    delta(i, 0) = Scalar(2) * e / static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);
  if (!grad) return loss;

  if (!grad->shapes_match(p)) *grad = Mlp<Scalar>::zeros(p.dims);
  for (std::size_t l = p.layers(); l-- > 0;) {
    const Mat& a_in = tape.activations[l];
    grad->weights[l].noalias() = delta.transpose() * a_in;
    grad->biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Mat back = delta * p.weights[l];
    // rectifier derivative: zero where the unit was inactive
    back = back.cwiseProduct((a_in.array() > Scalar(0)).template cast<Scalar>().matrix());
    delta = std::move(back);
  }
  return loss;
}

// Gradient of (f(x) - target)^2 for a single sample.
template <class Scalar>
Mlp<Scalar> mlp_gradient(const Mlp<Scalar>& p, std::span<const Scalar> x, Scalar target) {
  for (Scalar v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("mlp_gradient: non-finite input");
  if (!std::isfinite(target)) throw std::invalid_argument("mlp_gradient: non-finite target");
  if (static_cast<int>(x.size()) != p.input_dim()) throw std::invalid_argument("mlp_gradient: input size mismatch");
  typename Mlp<Scalar>::Mat row(1, p.input_dim());
  for (int k = 0; k < p.input_dim(); ++k) row(0, k) = x[k];
  Mlp<Scalar> g = Mlp<Scalar>::zeros(p.dims);
  const Scalar t[1] = {target};
  mlp_loss_gradient(p, row, std::span<const Scalar>(t, 1), &g);
  return g;
}

}  // namespace cellsleep
