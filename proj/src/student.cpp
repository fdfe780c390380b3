#include "qdistill/student.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qdistill/error.hpp"
#include "qdistill/rng.hpp"

namespace qdistill {

std::size_t StudentParams::num_values() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
  return total;
}

StudentParams StudentParams::zeros_like() const {
  StudentParams out;
  out.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.weights.push_back(Eigen::MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
    out.biases.push_back(Eigen::VectorXd::Zero(biases[l].size()));
  }
  return out;
}

std::vector<double> StudentParams::flatten() const {
  std::vector<double> out;
  out.reserve(num_values());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
    out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return out;
}

void StudentParams::assign_flat(std::span<const double> values) {
  if (values.size() != num_values()) {
    throw Error(ErrorKind::kShape, "flat parameter vector has " + std::to_string(values.size()) +
                                       " entries, expected " + std::to_string(num_values()));
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(values.data() + pos, weights[l].size(), weights[l].data());
    pos += static_cast<std::size_t>(weights[l].size());
    std::copy_n(values.data() + pos, biases[l].size(), biases[l].data());
    pos += static_cast<std::size_t>(biases[l].size());
  }
}

void StudentParams::add_scaled(const StudentParams& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

bool StudentParams::operator==(const StudentParams& other) const {
  if (layer_sizes != other.layer_sizes) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

void AdamWConfig::validate() const {
  if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(eps > 0.0) || !(weight_decay >= 0.0)) {
    throw Error(ErrorKind::kConfiguration, "invalid AdamW hyperparameters");
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void validate_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw Error(ErrorKind::kConfiguration, "a student needs at least an input and an output size");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw Error(ErrorKind::kConfiguration, "layer sizes must be positive");
  }
  if (layer_sizes.back() != 1) {
    throw Error(ErrorKind::kConfiguration, "the output layer must have exactly one unit");
  }
}

StudentParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  validate_layer_sizes(layer_sizes);
  Rng rng(seed);
  StudentParams params;
  params.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

double forward(const StudentParams& params, std::span<const double> feature) {
  if (static_cast<int>(feature.size()) != params.input_dim()) {
    throw Error(ErrorKind::kShape, "feature has length " + std::to_string(feature.size()) +
                                       ", student expects " + std::to_string(params.input_dim()));
  }
  Eigen::VectorXd act = Eigen::Map<const Eigen::VectorXd>(feature.data(), feature.size());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Eigen::VectorXd z = params.weights[l] * act + params.biases[l];
    if (l + 1 < params.num_layers()) z = z.unaryExpr([](double v) { return gelu(v); });
    act = std::move(z);
  }
  return act[0];
}

Eigen::VectorXd forward_batch(const StudentParams& params, const Eigen::MatrixXd& features) {
  if (features.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShape, "feature matrix has " + std::to_string(features.cols()) +
                                       " columns, student expects " +
                                       std::to_string(params.input_dim()));
  }
  Eigen::MatrixXd act = features.transpose();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd z = (params.weights[l] * act).colwise() + params.biases[l];
    if (l + 1 < params.num_layers()) z = z.unaryExpr([](double v) { return gelu(v); });
    act = std::move(z);
  }
  return act.row(0).transpose();
}

ParamGrads backward(const StudentParams& params, const Eigen::MatrixXd& features,
                    std::span<const double> output_grads) {
  if (static_cast<Eigen::Index>(output_grads.size()) != features.rows()) {
    throw Error(ErrorKind::kShape, "output gradient count does not match batch size");
  }
  if (features.cols() != params.input_dim()) {
    throw Error(ErrorKind::kShape, "feature matrix width does not match the student input");
  }
  const std::size_t layers = params.num_layers();
  // pre[l] is the pre-activation of layer l, acts[l] the input to layer l.
  std::vector<Eigen::MatrixXd> acts(layers);
  std::vector<Eigen::MatrixXd> pre(layers);
  acts[0] = features.transpose();
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = (params.weights[l] * acts[l]).colwise() + params.biases[l];
    if (l + 1 < layers) acts[l + 1] = pre[l].unaryExpr([](double v) { return gelu(v); });
  }

  ParamGrads grads = params.zeros_like();
  Eigen::MatrixXd delta =
      Eigen::Map<const Eigen::RowVectorXd>(output_grads.data(), output_grads.size());
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = delta * acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (params.weights[l].transpose() * delta)
                  .cwiseProduct(pre[l - 1].unaryExpr([](double v) { return gelu_derivative(v); }));
    }
  }
  return grads;
}

OptimizerState make_optimizer_state(const StudentParams& params, const AdamWConfig& hyper) {
  hyper.validate();
  return {0, hyper, params.zeros_like(), params.zeros_like()};
}

void optimizer_step(StudentParams& params, const ParamGrads& grads, OptimizerState& state,
                    std::size_t first_trainable_layer) {
  const AdamWConfig& h = state.hyper;
  h.validate();
  if (grads.layer_sizes != params.layer_sizes ||
      state.first_moment.layer_sizes != params.layer_sizes) {
    throw Error(ErrorKind::kShape, "gradient/optimizer shapes do not match the parameters");
  }
  for (std::size_t l = 0; l < grads.num_layers(); ++l) {
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      throw Error(ErrorKind::kTrainingDivergence,
                  "non-finite gradient at optimizer step " + std::to_string(state.step + 1));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  const double decay = 1.0 - h.lr * h.weight_decay;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
    p *= decay;
    p -= (h.lr * (m / correction1).array() / ((v / correction2).array().sqrt() + h.eps)).matrix();
  };
  for (std::size_t l = first_trainable_layer; l < params.num_layers(); ++l) {
    update(params.weights[l], grads.weights[l], state.first_moment.weights[l],
           state.second_moment.weights[l]);
    update(params.biases[l], grads.biases[l], state.first_moment.biases[l],
           state.second_moment.biases[l]);
  }
}

}  // namespace qdistill
