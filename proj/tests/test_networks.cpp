#include <gtest/gtest.h>

#include <cmath>

#include "cellsleep/training.hpp"
#include "oracles.hpp"

using namespace cellsleep;
using Mat = Mlp<double>::Mat;

TEST(MlpForward, ZeroWeightsReturnOutputBias) {
  auto m = Mlp<double>::zeros({3, 4, 1});
  m.biases.back()(0) = 2.5;
  const std::vector<double> x{1.0, -7.0, 3.0};
  EXPECT_DOUBLE_EQ(mlp_forward(m, std::span<const double>(x)), 2.5);
}

TEST(MlpForward, SingleHiddenUnitHandComputed) {
  auto m = Mlp<double>::zeros({2, 1, 1});
  m.weights[0] << 1.0, -2.0;
  m.biases[0] << 0.5;
  m.weights[1] << 3.0;
  m.biases[1] << -1.0;
  const std::vector<double> pos{4.0, 1.0};  // relu(4 - 2 + 0.5) = 2.5 -> 3*2.5 - 1
  EXPECT_DOUBLE_EQ(mlp_forward(m, std::span<const double>(pos)), 6.5);
  const std::vector<double> neg{0.0, 1.0};  // relu(-1.5) = 0
  EXPECT_DOUBLE_EQ(mlp_forward(m, std::span<const double>(neg)), -1.0);
}

TEST(MlpForward, DoublingLastLayerDoublesLinearPath) {
  auto m = Mlp<double>::zeros({2, 2, 1});
  m.weights[0] << 1.0, 0.0, 0.0, 1.0;
  m.weights[1] << 0.7, -0.4;
  m.biases[1] << 0.25;
  const std::vector<double> x{2.0, 3.0};
  const double base = mlp_forward(m, std::span<const double>(x)) - 0.25;
  m.weights[1] *= 2.0;
  EXPECT_NEAR(mlp_forward(m, std::span<const double>(x)) - 0.25, 2.0 * base, 1e-12);
}

TEST(MlpForward, RejectsShapeMismatch) {
  auto m = Mlp<double>::zeros({3, 1});
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(mlp_forward(m, std::span<const double>(x)), std::invalid_argument);
}

TEST(MlpGradient, ZeroWhenOutputMatchesTarget) {
  Rng rng(3);
  auto m = Mlp<double>::glorot({3, 4, 1}, rng);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const double y = mlp_forward(m, std::span<const double>(x));
  auto g = mlp_gradient(m, std::span<const double>(x), y);
  for (auto t : g.tensors())
    for (double v : t) EXPECT_EQ(v, 0.0);
}

TEST(MlpGradient, DeadUnitPassesNoGradient) {
  auto m = Mlp<double>::zeros({2, 2, 1});
  m.weights[0] << 1.0, 1.0, -1.0, -1.0;  // unit 1 is dead for positive inputs
  m.weights[1] << 1.0, 1.0;
  const std::vector<double> x{1.0, 2.0};
  auto g = mlp_gradient(m, std::span<const double>(x), 0.0);
  EXPECT_EQ(g.weights[0](1, 0), 0.0);
  EXPECT_EQ(g.weights[0](1, 1), 0.0);
  EXPECT_EQ(g.biases[0](1), 0.0);
  EXPECT_EQ(g.weights[1](0, 1), 0.0);
  EXPECT_NE(g.weights[0](0, 0), 0.0);
}

TEST(MlpGradient, RejectsNonFiniteInput) {
  auto m = Mlp<double>::zeros({2, 1});
  const std::vector<double> x{1.0, std::nan("")};
  EXPECT_THROW(mlp_gradient(m, std::span<const double>(x), 0.0), std::invalid_argument);
}

class MlpFiniteDifference : public ::testing::TestWithParam<int> {};

TEST_P(MlpFiniteDifference, MatchesCentralDifferences) {
  const auto f = oracle::random_mlp_fixture(1000 + static_cast<std::uint64_t>(GetParam()));
  const auto r = oracle::check_mlp(f);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, MlpFiniteDifference, ::testing::Range(0, 24));

TEST(LstmForward, ZeroWeightsGiveZero) {
  const auto m = Lstm<double>::zeros(3, {2, 2});
  const std::vector<std::vector<double>> w{{1.0, 2.0, 3.0}, {-1.0, 0.5, 4.0}};
  EXPECT_EQ(lstm_forward(m, w), 0.0);
}

TEST(LstmForward, SingleStepHandComputed) {
  auto m = Lstm<double>::zeros(1, {2});
  auto& c = m.cells[0];
  // gate rows: i0 i1 f0 f1 g0 g1 o0 o1
  c.w << 0.5, -0.3, 0.2, 0.1, 0.8, -0.6, 0.4, 0.9;
  c.b << 0.1, 0.0, 1.0, 1.0, -0.2, 0.3, 0.0, -0.1;
  m.head_w << 1.5, -2.0;
  m.head_b << 0.05;
  const double x = 0.7;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double y = 0.05;
  const double wi[2] = {0.5, -0.3}, bi[2] = {0.1, 0.0};
  const double wg[2] = {0.8, -0.6}, bg[2] = {-0.2, 0.3};
  const double wo[2] = {0.4, 0.9}, bo[2] = {0.0, -0.1};
  const double head[2] = {1.5, -2.0};
  for (int k = 0; k < 2; ++k) {
    const double cell = sig(wi[k] * x + bi[k]) * std::tanh(wg[k] * x + bg[k]);  // previous cell state is zero
    y += head[k] * sig(wo[k] * x + bo[k]) * std::tanh(cell);
  }
  EXPECT_NEAR(lstm_forward(m, {{x}}), y, 1e-12);
}

TEST(LstmForward, SequenceSensitivity) {
  const std::vector<std::vector<double>> w{{0.3, -0.2}, {0.9, 0.1}};
  auto padded = w;
  padded.insert(padded.begin(), w.front());
  EXPECT_EQ(lstm_forward(Lstm<double>::zeros(2, {3}), w), lstm_forward(Lstm<double>::zeros(2, {3}), padded));
  Rng rng(8);
  const auto m = Lstm<double>::glorot(2, {3, 2}, rng);
  EXPECT_NE(lstm_forward(m, w), lstm_forward(m, padded));
}

TEST(LstmForward, RejectsEmptyWindow) {
  const auto m = Lstm<double>::zeros(2, {2});
  EXPECT_THROW(lstm_forward(m, {}), std::invalid_argument);
  EXPECT_THROW(lstm_gradient(m, {}, 0.0), std::invalid_argument);
}

TEST(LstmGradient, ZeroWhenOutputMatchesTarget) {
  Rng rng(5);
  const auto m = Lstm<double>::glorot(2, {2}, rng);
  const std::vector<std::vector<double>> w{{0.1, 0.2}, {0.3, 0.4}};
  const auto g = lstm_gradient(m, w, lstm_forward(m, w));
  for (auto t : const_cast<Lstm<double>&>(g).tensors())
    for (double v : t) EXPECT_EQ(v, 0.0);
}

TEST(LstmGradient, TwoUnitWindowTwoFixture) {
  Rng rng(12);
  auto m = Lstm<double>::glorot(2, {2}, rng);
  oracle::LstmFixture f{m, {}, {0.4}};
  Mat a(1, 2), b(1, 2);
  a << 0.5, -1.0;
  b << -0.3, 0.8;
  f.seq = {a, b};
  EXPECT_LT(oracle::check_lstm(f).max_rel, 1e-4);
}

TEST(LstmGradient, FirstStepInputWeightsNeedAFirstStep) {
  // with a one-step window the earlier input cannot reach the loss, so the
  // recurrent weights (which only act on the previous hidden state) get nothing
  Rng rng(13);
  const auto m = Lstm<double>::glorot(2, {3}, rng);
  const auto g = lstm_gradient(m, {{0.5, -0.5}}, 1.0);
  EXPECT_TRUE(g.cells[0].u.isZero(0.0));
  const auto g2 = lstm_gradient(m, {{0.2, 0.1}, {0.5, -0.5}}, 1.0);
  EXPECT_FALSE(g2.cells[0].u.isZero(0.0));
}

class LstmFiniteDifference : public ::testing::TestWithParam<int> {};

TEST_P(LstmFiniteDifference, MatchesCentralDifferences) {
  const auto f = oracle::random_lstm_fixture(5000 + static_cast<std::uint64_t>(GetParam()));
  const auto r = oracle::check_lstm(f);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, LstmFiniteDifference, ::testing::Range(0, 24));

namespace {

struct LinearFixture {
  Mat x;
  std::vector<double> y;
};

LinearFixture line(int n) {
  LinearFixture f;
  f.x.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    f.x(i, 0) = -1.0 + 2.0 * i / (n - 1);
    f.y.push_back(2.0 * f.x(i, 0));
  }
  return f;
}

auto linear_loss(const LinearFixture& f) {
  return [&f](const Mlp<double>& p, std::span<const std::size_t> idx, Mlp<double>* grad) {
    Mat xb(static_cast<Eigen::Index>(idx.size()), 1);
    std::vector<double> yb;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      xb(static_cast<Eigen::Index>(k), 0) = f.x(static_cast<Eigen::Index>(idx[k]), 0);
      yb.push_back(f.y[idx[k]]);
    }
    return mlp_loss_gradient(p, xb, std::span<const double>(yb), grad);
  };
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
  const auto f = line(32);
  Rng rng(1);
  auto m = Mlp<double>::glorot({1, 1}, rng);
  const auto before = m;
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.0);
  const auto idx = iota(32);
  const auto rep = train(m, std::span<const std::size_t>(idx), {}, linear_loss(f), st, TrainOptions{5, 8, 0, 3});
  EXPECT_EQ(m.weights[0], before.weights[0]);
  EXPECT_EQ(m.biases[0], before.biases[0]);
  ASSERT_EQ(rep.train_loss.size(), 5u);
  for (double l : rep.train_loss) EXPECT_NEAR(l, rep.train_loss.front(), 1e-12);
}

TEST(Train, LearnsDoubling) {
  const auto f = line(64);
  Rng rng(2);
  auto m = Mlp<double>::glorot({1, 1}, rng);
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.5);
  const auto idx = iota(64);
  const auto rep = train(m, std::span<const std::size_t>(idx), {}, linear_loss(f), st, TrainOptions{200, 8, 0, 4});
  EXPECT_LT(rep.train_loss.back(), 1e-3);
  EXPECT_NEAR(m.weights[0](0, 0), 2.0, 0.05);
}

TEST(Train, SameSeedSameHistory) {
  const auto f = line(40);
  auto run = [&](std::uint64_t seed) {
    Rng rng(9);
    auto m = Mlp<double>::glorot({1, 3, 1}, rng);
    auto st = AdagradState<Mlp<double>>::for_model(m, 0.1);
    const auto idx = iota(30);
    const auto held = std::vector<std::size_t>{30, 31, 32, 33, 34, 35, 36, 37, 38, 39};
    return train(m, std::span<const std::size_t>(idx), std::span<const std::size_t>(held), linear_loss(f), st,
                 TrainOptions{20, 4, 0, seed});
  };
  const auto a = run(11), b = run(11), c = run(12);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.heldout_loss, b.heldout_loss);
  EXPECT_NE(a.train_loss, c.train_loss);
}

TEST(Train, HeldoutNeverUpdatesParameters) {
  const auto f = line(20);
  Rng rng(4);
  auto m = Mlp<double>::glorot({1, 1}, rng);
  const auto before = m;
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.3);
  int grad_calls_on_heldout = 0;
  auto loss = [&](const Mlp<double>& p, std::span<const std::size_t> idx, Mlp<double>* grad) {
    for (auto i : idx)
      if (i >= 10 && grad) ++grad_calls_on_heldout;
    return linear_loss(f)(p, idx, grad);
  };
  const auto idx = iota(10);
  std::vector<std::size_t> held{10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  train(m, std::span<const std::size_t>(idx), std::span<const std::size_t>(held), loss, st, TrainOptions{3, 4, 0, 1});
  EXPECT_EQ(grad_calls_on_heldout, 0);
  EXPECT_NE(m.weights[0], before.weights[0]);
}

TEST(Train, RejectsEmptyDataset) {
  const auto f = line(4);
  Rng rng(4);
  auto m = Mlp<double>::glorot({1, 1}, rng);
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.1);
  EXPECT_THROW(train(m, {}, {}, linear_loss(f), st, TrainOptions{}), std::invalid_argument);
}

TEST(Train, EarlyStopsOnStalledHeldout) {
  const auto f = line(20);
  Rng rng(4);
  auto m = Mlp<double>::glorot({1, 1}, rng);
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.0);  // nothing improves
  const auto idx = iota(10);
  std::vector<std::size_t> held{10, 11, 12};
  const auto rep =
      train(m, std::span<const std::size_t>(idx), std::span<const std::size_t>(held), linear_loss(f), st,
            TrainOptions{50, 4, 3, 1});
  EXPECT_TRUE(rep.early_stopped);
  EXPECT_EQ(rep.train_loss.size(), 4u);
  EXPECT_EQ(rep.best_epoch, 0);
}

TEST(Adagrad, AccumulatorsNeverDecrease) {
  Rng rng(6);
  auto m = Mlp<double>::glorot({2, 3, 1}, rng);
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.05);
  std::mt19937_64 gen(1);
  auto prev = st.accum;
  for (int k = 0; k < 20; ++k) {
    auto g = Mlp<double>::zeros(m.dims);
    for (auto t : g.tensors())
      for (auto& v : t) v = std::normal_distribution<double>(0.0, 1.0)(gen);
    adagrad_step(m, g, st);
    auto a = st.accum.tensors();
    auto b = prev.tensors();
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[i].size(); ++j) EXPECT_GE(a[i][j], b[i][j]);
    prev = st.accum;
  }
}

TEST(Adagrad, UpdateRule) {
  auto m = Mlp<double>::zeros({1, 1});
  m.weights[0](0, 0) = 1.0;
  auto st = AdagradState<Mlp<double>>::for_model(m, 0.1, 0.0);
  auto g = Mlp<double>::zeros({1, 1});
  g.weights[0](0, 0) = 2.0;
  adagrad_step(m, g, st);
  EXPECT_NEAR(m.weights[0](0, 0), 1.0 - 0.1 * 2.0 / 2.0, 1e-15);
  adagrad_step(m, g, st);
  EXPECT_NEAR(m.weights[0](0, 0), 0.9 - 0.1 * 2.0 / std::sqrt(8.0), 1e-15);
}
