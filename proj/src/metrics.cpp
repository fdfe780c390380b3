#include "qdistill/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qdistill/error.hpp"

namespace qdistill {
namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kShape, "metric inputs differ in length (" + std::to_string(x.size()) +
                                       " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < min_n) {
    throw Error(ErrorKind::kDegenerateMetric,
                "need at least " + std::to_string(min_n) + " samples");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorKind::kDegenerateMetric, "constant input vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double logistic4(const Eigen::Vector4d& b, double x) {
  return b[1] + (b[0] - b[1]) / (1.0 + std::exp(-(x - b[2]) / std::abs(b[3])));
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  return pearson(x, y);
}

double plcc_logistic(std::span<const double> pred, std::span<const double> label) {
  check_lengths(pred, label, 5);
  const auto n = pred.size();
  const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
  const auto [lmin, lmax] = std::minmax_element(label.begin(), label.end());
  const double mean_pred = std::accumulate(pred.begin(), pred.end(), 0.0) / double(n);
  Eigen::Vector4d beta(*lmax, *lmin, mean_pred, std::max(1e-3, (*pmax - *pmin) / 4.0));

  auto sse = [&](const Eigen::Vector4d& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(logistic4(b, pred[i]) - label[i], 2);
    return s;
  };

  // Levenberg-Marquardt with a forward-difference Jacobian.
  double damping = 1e-3;
  double current = sse(beta);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd jac(n, 4);
    Eigen::VectorXd resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = logistic4(beta, pred[i]) - label[i];
      for (int p = 0; p < 4; ++p) {
        Eigen::Vector4d bp = beta;
        const double h = 1e-7 * std::max(1.0, std::abs(beta[p]));
        bp[p] += h;
        jac(i, p) = (logistic4(bp, pred[i]) - logistic4(beta, pred[i])) / h;
      }
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * resid;
    Eigen::Matrix4d lhs = jtj;
    lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector4d step = lhs.ldlt().solve(-jtr);
    const Eigen::Vector4d trial = beta + step;
    const double next = sse(trial);
    if (std::isfinite(next) && next < current) {
      const double gain = current - next;
      beta = trial;
      current = next;
      damping = std::max(damping / 3.0, 1e-12);
      if (gain < 1e-14 * std::max(1.0, current)) break;
    } else {
      damping *= 4.0;
      if (damping > 1e12) break;
    }
  }
  std::vector<double> mapped(n);
  for (std::size_t i = 0; i < n; ++i) mapped[i] = logistic4(beta, pred[i]);
  return pearson(mapped, label);
}

ResidualStats residual_stats(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) throw Error(ErrorKind::kShape, "residual inputs differ in length");
  if (pred.empty()) throw Error(ErrorKind::kEmptyBatch, "residual statistics of an empty set");
  ResidualStats out;
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - label[i];
    out.mean_residual += r;
    out.mae += std::abs(r);
    sq += r * r;
  }
  const auto n = static_cast<double>(pred.size());
  out.mean_residual /= n;
  out.mae /= n;
  out.rmse = std::sqrt(sq / n);
  return out;
}

EvalReport evaluate(std::span<const double> pred, std::span<const double> label) {
  check_lengths(pred, label, 2);
  const ResidualStats r = residual_stats(pred, label);
  return {srcc(pred, label), plcc(pred, label), r.mean_residual, r.mae, r.rmse, pred.size()};
}

}  // namespace qdistill
