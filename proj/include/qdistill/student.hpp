/**
 * student.hpp: the scalar quality regressor and its optimizer.
 *
 * A fully connected network over fixed-length feature vectors: affine layers
 * with GELU between them and an identity output unit. Gradients are written
 * out by hand; the optimizer is AdamW (bias-corrected moments, decoupled
 * weight decay).
 */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace qdistill {

struct StudentParams {
  std::vector<int> layer_sizes;          // input dim, hidden widths..., 1
  std::vector<Eigen::MatrixXd> weights;  // layer l: layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> biases;

  std::size_t num_layers() const { return weights.size(); }
  int input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  std::size_t num_values() const;

  /// Same shapes, every entry zero.
  StudentParams zeros_like() const;

  /// Weights then bias of each layer, weights in column-major order.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  void add_scaled(const StudentParams& other, double scale);

  bool operator==(const StudentParams& other) const;
};

using ParamGrads = StudentParams;

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  void validate() const;
};

struct OptimizerState {
  std::int64_t step = 0;
  AdamWConfig hyper;
  StudentParams first_moment;
  StudentParams second_moment;
};

double gelu(double x);
double gelu_derivative(double x);

/// Uniform(-b, b) weights with b = sqrt(6 / (fan_in + fan_out)); zero biases.
StudentParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Checks the layer-size contract: at least two sizes, all positive, last 1.
void validate_layer_sizes(const std::vector<int>& layer_sizes);

double forward(const StudentParams& params, std::span<const double> feature);

/// One score per row of `features`.
Eigen::VectorXd forward_batch(const StudentParams& params, const Eigen::MatrixXd& features);

/// Gradient of sum_i output_grads[i] * s(features.row(i)) w.r.t. every parameter.
ParamGrads backward(const StudentParams& params, const Eigen::MatrixXd& features,
                    std::span<const double> output_grads);

OptimizerState make_optimizer_state(const StudentParams& params, const AdamWConfig& hyper);

/// In-place AdamW update. Layers below `first_trainable_layer` are left as is
/// (their moments too), which is how the head-only fine-tuning mode works.
void optimizer_step(StudentParams& params, const ParamGrads& grads, OptimizerState& state,
                    std::size_t first_trainable_layer = 0);

}  // namespace qdistill
