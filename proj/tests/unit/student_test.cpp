#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qdistill/error.hpp"
#include "qdistill/losses.hpp"
#include "qdistill/student.hpp"

using namespace qdistill;

namespace {

// Second evaluator over the flat parameter layout, loops only.
double reference_forward(const std::vector<int>& sizes, const std::vector<double>& flat,
                         const std::vector<double>& x) {
  std::vector<double> act = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    std::vector<double> next(out, 0.0);
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < out; ++r) next[r] += flat[off + c * out + r] * act[c];
    off += static_cast<std::size_t>(in) * out;
    for (int r = 0; r < out; ++r) next[r] += flat[off + r];
    off += out;
    if (l + 2 < sizes.size()) {
      for (double& v : next) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    }
    act = next;
  }
  return act[0];
}

Eigen::MatrixXd random_batch(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(gen);
  return m;
}

std::vector<double> row(const Eigen::MatrixXd& m, int i) {
  std::vector<double> r(m.cols());
  for (int j = 0; j < m.cols(); ++j) r[j] = m(i, j);
  return r;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST(InitParams, Shapes) {
  const auto p = init_params({16, 1}, 5);
  ASSERT_EQ(p.num_layers(), 1u);
  EXPECT_EQ(p.weights[0].rows(), 1);
  EXPECT_EQ(p.weights[0].cols(), 16);
  ASSERT_EQ(p.biases[0].size(), 1);
  EXPECT_EQ(p.biases[0](0), 0.0);

  const auto deep = init_params({16, 32, 1}, 5);
  ASSERT_EQ(deep.num_layers(), 2u);
  EXPECT_EQ(deep.weights[0].rows(), 32);
  EXPECT_EQ(deep.weights[1].cols(), 32);
}

TEST(InitParams, DeterministicAndBounded) {
  const auto a = init_params({8, 12, 1}, 9);
  EXPECT_TRUE(a == init_params({8, 12, 1}, 9));
  EXPECT_FALSE(a == init_params({8, 12, 1}, 10));
  const double bound = std::sqrt(6.0 / (8 + 12));
  EXPECT_LE(a.weights[0].cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(a.biases[0].squaredNorm(), 0.0);
}

TEST(InitParams, InvalidSizes) {
  EXPECT_THROW(init_params({4}, 0), Error);
  EXPECT_THROW(init_params({4, 0, 1}, 0), Error);
  EXPECT_THROW(init_params({4, 2}, 0), Error);
}

TEST(Forward, ZeroParams) {
  const auto p = init_params({3, 4, 1}, 0).zeros_like();
  EXPECT_EQ(forward(p, std::vector<double>{1, 2, 3}), 0.0);
}

TEST(Forward, AffineIdentity) {
  auto p = init_params({3, 1}, 0);
  p.weights[0] << 1, 0, 0;
  p.biases[0] << 0.5;
  EXPECT_DOUBLE_EQ(forward(p, std::vector<double>{1, 0, 0}), 1.5);
}

TEST(Forward, MatchesIndependentEvaluator) {
  const std::vector<int> sizes = {6, 10, 5, 1};
  const auto p = init_params(sizes, 0);
  const auto x = random_batch(20, 6, 0);
  const auto batch = forward_batch(p, x);
  for (int i = 0; i < 20; ++i) {
    const double want = reference_forward(sizes, p.flatten(), row(x, i));
    EXPECT_NEAR(forward(p, row(x, i)), want, 1e-12);
    EXPECT_NEAR(batch(i), want, 1e-12);
  }
}

TEST(Forward, DimensionMismatch) {
  const auto p = init_params({3, 1}, 0);
  try {
    forward(p, std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Forward, Deterministic) {
  const auto p = init_params({5, 7, 1}, 3);
  const auto x = random_batch(1, 5, 1);
  const double a = forward(p, row(x, 0));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(forward(p, row(x, 0)), a);
}

TEST(Backward, ZeroOutputGrads) {
  const auto p = init_params({4, 6, 1}, 1);
  const auto x = random_batch(3, 4, 2);
  const auto g = backward(p, x, std::vector<double>{0, 0, 0});
  for (double v : g.flatten()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, LinearCase) {
  auto p = init_params({3, 1}, 1);
  Eigen::MatrixXd x(1, 3);
  x << 0.5, -2, 3;
  const auto g = backward(p, x, std::vector<double>{1.5});
  for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g.weights[0](0, j), 1.5 * x(0, j));
  EXPECT_DOUBLE_EQ(g.biases[0](0), 1.5);
}

TEST(Backward, ShapeMismatch) {
  const auto p = init_params({4, 1}, 1);
  EXPECT_THROW(backward(p, random_batch(3, 4, 0), std::vector<double>{1, 2}), Error);
}

TEST(Backward, FiniteDifferences) {
  const std::vector<int> sizes = {5, 8, 4, 1};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = init_params(sizes, seed);
    const auto x = random_batch(6, 5, 100 + seed);
    std::vector<double> og = {0.3, -1.2, 0.7, 2.0, -0.4, 1.1};
    const auto analytic = backward(p, x, og).flatten();
    auto objective = [&](const StudentParams& q) {
      const auto s = forward_batch(q, x);
      double v = 0;
      for (int i = 0; i < 6; ++i) v += og[i] * s(i);
      return v;
    };
    std::vector<double> flat = p.flatten();
    const double h = 1e-4;
    double worst = 0;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      auto plus = flat, minus = flat;
      plus[k] += h;
      minus[k] -= h;
      p.assign_flat(plus);
      const double fp = objective(p);
      p.assign_flat(minus);
      const double fm = objective(p);
      worst = std::max(worst, rel_err(analytic[k], (fp - fm) / (2 * h)));
    }
    p.assign_flat(flat);
    EXPECT_LT(worst, 1e-4) << "seed " << seed;
  }
}

TEST(Optimizer, ZeroGradNoDecay) {
  auto p = init_params({3, 2, 1}, 0);
  const auto before = p;
  auto state = make_optimizer_state(p, {0.1, 0.9, 0.999, 1e-8, 0.0});
  optimizer_step(p, p.zeros_like(), state);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(state.step, 1);
}

TEST(Optimizer, DecoupledDecay) {
  auto p = init_params({3, 2, 1}, 0);
  const auto before = p.flatten();
  const AdamWConfig hyper{0.1, 0.9, 0.999, 1e-8, 0.01};
  auto state = make_optimizer_state(p, hyper);
  optimizer_step(p, p.zeros_like(), state);
  const auto after = p.flatten();
  for (std::size_t k = 0; k < before.size(); ++k) {
    EXPECT_NEAR(after[k], before[k] * (1 - 0.1 * 0.01), 1e-15);
  }
}

TEST(Optimizer, FirstStepScalar) {
  auto p = init_params({1, 1}, 0);
  p.weights[0](0, 0) = 1.0;
  auto g = p.zeros_like();
  g.weights[0](0, 0) = 1.0;
  auto state = make_optimizer_state(p, {0.1, 0.9, 0.999, 1e-8, 0.0});
  optimizer_step(p, g, state);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.weights[0](0, 0), 0.9, 1e-6);
}

TEST(Optimizer, MomentShapesMatch) {
  const auto p = init_params({4, 3, 1}, 0);
  const auto state = make_optimizer_state(p, {});
  EXPECT_EQ(state.first_moment.layer_sizes, p.layer_sizes);
  EXPECT_EQ(state.second_moment.num_values(), p.num_values());
}

TEST(Optimizer, NonFiniteGradient) {
  auto p = init_params({2, 1}, 0);
  auto g = p.zeros_like();
  g.weights[0](0, 1) = std::nan("");
  auto state = make_optimizer_state(p, {});
  try {
    optimizer_step(p, g, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTrainingDivergence);
  }
}

TEST(Optimizer, InvalidHyper) {
  EXPECT_THROW((AdamWConfig{0.0, 0.9, 0.999, 1e-8, 0}.validate()), Error);
  EXPECT_THROW((AdamWConfig{0.1, 1.0, 0.999, 1e-8, 0}.validate()), Error);
  EXPECT_THROW((AdamWConfig{0.1, 0.9, 0.999, 0.0, 0}.validate()), Error);
  EXPECT_THROW((AdamWConfig{0.1, 0.9, 0.999, 1e-8, -1}.validate()), Error);
}

TEST(Optimizer, HeadOnlyLeavesLowerLayers) {
  auto p = init_params({3, 4, 1}, 2);
  const auto before = p;
  const auto x = random_batch(5, 3, 7);
  const auto g = backward(p, x, std::vector<double>{1, 1, 1, 1, 1});
  auto state = make_optimizer_state(p, {0.1, 0.9, 0.999, 1e-8, 0.0});
  optimizer_step(p, g, state, 1);
  EXPECT_EQ(p.weights[0], before.weights[0]);
  EXPECT_NE(p.weights[1], before.weights[1]);
}

TEST(Training, LinearTargetsConverge) {
  const int d = 4;
  auto p = init_params({d, 1}, 11);
  auto state = make_optimizer_state(p, {0.05, 0.9, 0.999, 1e-8, 0.0});
  const std::vector<double> w = {0.5, -1.0, 2.0, 0.25};
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0, 1);
  double mse = 1e9;
  for (int step = 0; step < 2000 && mse >= 1e-3; ++step) {
    Eigen::MatrixXd x(32, d);
    std::vector<double> y(32);
    for (int i = 0; i < 32; ++i) {
      y[i] = 0.3;
      for (int j = 0; j < d; ++j) {
        x(i, j) = n(gen);
        y[i] += w[j] * x(i, j);
      }
    }
    const auto s = forward_batch(p, x);
    const std::vector<double> sv(s.data(), s.data() + s.size());
    const LossValue loss = mse_loss(sv, y);
    mse = loss.value;
    optimizer_step(p, backward(p, x, loss.score_grads), state);
  }
  EXPECT_LT(mse, 1e-3);
}
