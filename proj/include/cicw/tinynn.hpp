#pragma once

// Small fully connected network: tanh hidden layers and either a single
// sigmoid unit (binary, K = 2) or a softmax head. Gradients are derived by
// hand; weights handed to `weighted_backward` are constants.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cicw {

enum class OutputHead { kSigmoidBinary, kSoftmax };

OutputHead parse_output_head(const std::string& name);
std::string to_string(OutputHead head);

struct MLPParams {
  // Input dimension first, output units last. The sigmoid head has one
  // output unit and K = 2.
  std::vector<std::size_t> layer_sizes;
  OutputHead head = OutputHead::kSoftmax;
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;

  static MLPParams zeros(std::vector<std::size_t> layer_sizes, OutputHead head);
  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static MLPParams initialize(std::vector<std::size_t> layer_sizes, OutputHead head,
                              std::uint64_t seed);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const;
  void validate() const;
};

using Gradients = MLPParams;

/// Euclidean distance between two parameter sets of the same shape.
double parameter_distance(const MLPParams& a, const MLPParams& b);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // layer inputs; [0] is the features
  Eigen::MatrixXd logits;                     // n x output units
  Eigen::MatrixXd probabilities;              // n x K
};

ForwardCache forward(const MLPParams& params, const Eigen::MatrixXd& features);

inline constexpr double kProbabilityFloor = 1e-12;

/// L(i, j) = -log p_ij with p clipped to [1e-12, 1 - 1e-12].
Eigen::MatrixXd loss_matrix(const ForwardCache& cache);
double per_example_loss(const ForwardCache& cache, std::size_t i, std::size_t label);

/// Gradient of sum_i w_i sum_j c_ij L_ij. `coefficients` (n x K) holds the
/// class weights, or the (soft) labels when none are used.
Gradients weighted_backward(const MLPParams& params, const ForwardCache& cache,
                            const Eigen::MatrixXd& coefficients,
                            std::span<const double> instance_weights);

/// Lowest-index argmax of each probability row.
std::vector<std::size_t> predict(const ForwardCache& cache);

struct SgdState {
  std::vector<Eigen::MatrixXd> weight_velocity;
  std::vector<Eigen::VectorXd> bias_velocity;

  static SgdState zeros_like(const MLPParams& params);
};

/// v = m v + g, then p -= lr (g + m v) with Nesterov or p -= lr v without.
void sgd_step(MLPParams& params, const Gradients& grads, SgdState& state, double lr,
              double momentum, bool nesterov = true);

}  // namespace cicw
