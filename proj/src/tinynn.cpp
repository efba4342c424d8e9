#include "cicw/tinynn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cicw/errors.hpp"
#include "cicw/rng.hpp"

namespace cicw {

OutputHead parse_output_head(const std::string& name) {
  if (name == "sigmoid_binary") return OutputHead::kSigmoidBinary;
  if (name == "softmax") return OutputHead::kSoftmax;
  fail(ErrorKind::kInvalidArgument,
       "unknown output head '" + name + "' (expected sigmoid_binary or softmax)");
}

std::string to_string(OutputHead head) {
  return head == OutputHead::kSigmoidBinary ? "sigmoid_binary" : "softmax";
}

MLPParams MLPParams::zeros(std::vector<std::size_t> layer_sizes, OutputHead head) {
  require(layer_sizes.size() >= 2, ErrorKind::kInvalidArgument,
          "network needs an input and an output size");
  for (std::size_t s : layer_sizes) {
    require(s >= 1, ErrorKind::kInvalidArgument, "layer sizes must be positive");
  }
  if (head == OutputHead::kSigmoidBinary) {
    require(layer_sizes.back() == 1, ErrorKind::kInvalidArgument,
            "sigmoid head needs exactly one output unit");
  } else {
    require(layer_sizes.back() >= 2, ErrorKind::kInvalidArgument,
            "softmax head needs at least two output units");
  }
  MLPParams p;
  p.layer_sizes = std::move(layer_sizes);
  p.head = head;
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(p.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(p.layer_sizes[l + 1]);
    p.weights.push_back(Eigen::MatrixXd::Zero(out, in));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

MLPParams MLPParams::initialize(std::vector<std::size_t> layer_sizes, OutputHead head,
                                std::uint64_t seed) {
  MLPParams p = zeros(std::move(layer_sizes), head);
  Rng rng(seed);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_sizes[l]));
    std::uniform_real_distribution<double> draw(-bound, bound);
    // Row-major fill order so the draw sequence matches the checkpoint layout.
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) p.weights[l](r, c) = draw(rng);
    }
    for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) p.biases[l](r) = draw(rng);
  }
  return p;
}

std::size_t MLPParams::num_classes() const {
  return head == OutputHead::kSigmoidBinary ? 2 : layer_sizes.back();
}

void MLPParams::validate() const {
  require(layer_sizes.size() >= 2 && weights.size() + 1 == layer_sizes.size() &&
              biases.size() == weights.size(),
          ErrorKind::kShapeMismatch, "parameter layer count does not match the layer sizes");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == static_cast<Eigen::Index>(layer_sizes[l + 1]) &&
                weights[l].cols() == static_cast<Eigen::Index>(layer_sizes[l]) &&
                biases[l].size() == static_cast<Eigen::Index>(layer_sizes[l + 1]),
            ErrorKind::kShapeMismatch, "layer " + std::to_string(l) + " has the wrong shape");
    require(weights[l].allFinite() && biases[l].allFinite(), ErrorKind::kNumericRange,
            "layer " + std::to_string(l) + " has non-finite parameters");
  }
}

double parameter_distance(const MLPParams& a, const MLPParams& b) {
  require(a.layer_sizes == b.layer_sizes, ErrorKind::kShapeMismatch,
          "parameter sets differ in shape");
  double s = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    s += (a.weights[l] - b.weights[l]).squaredNorm() + (a.biases[l] - b.biases[l]).squaredNorm();
  }
  return std::sqrt(s);
}

ForwardCache forward(const MLPParams& params, const Eigen::MatrixXd& features) {
  require(features.cols() == static_cast<Eigen::Index>(params.input_dim()),
          ErrorKind::kShapeMismatch,
          "features have " + std::to_string(features.cols()) + " columns, network expects " +
              std::to_string(params.input_dim()));
  ForwardCache cache;
  cache.activations.push_back(features);
  const std::size_t layers = params.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = cache.activations.back() * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (l + 1 < layers) {
      cache.activations.push_back(z.array().tanh().matrix());
    } else {
      cache.logits = std::move(z);
    }
  }
  const Eigen::Index n = features.rows();
  if (params.head == OutputHead::kSigmoidBinary) {
    cache.probabilities.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-cache.logits(i, 0)));
      cache.probabilities(i, 0) = 1.0 - p;
      cache.probabilities(i, 1) = p;
    }
  } else {
    cache.probabilities.resize(n, cache.logits.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = cache.logits.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (cache.logits.row(i).array() - top).exp().matrix();
      cache.probabilities.row(i) = e / e.sum();
    }
  }
  return cache;
}

namespace {

double clipped(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }
bool is_clipped(double p) { return p < kProbabilityFloor || p > 1.0 - kProbabilityFloor; }

}  // namespace

Eigen::MatrixXd loss_matrix(const ForwardCache& cache) {
  const Eigen::MatrixXd& p = cache.probabilities;
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) out(i, j) = -std::log(clipped(p(i, j)));
  }
  return out;
}

double per_example_loss(const ForwardCache& cache, std::size_t i, std::size_t label) {
  require(i < static_cast<std::size_t>(cache.probabilities.rows()) &&
              label < static_cast<std::size_t>(cache.probabilities.cols()),
          ErrorKind::kInvalidArgument, "example or label index out of range");
  return -std::log(clipped(cache.probabilities(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(label))));
}

Gradients weighted_backward(const MLPParams& params, const ForwardCache& cache,
                            const Eigen::MatrixXd& coefficients,
                            std::span<const double> instance_weights) {
  const Eigen::MatrixXd& p = cache.probabilities;
  const Eigen::Index n = p.rows();
  const Eigen::Index k = p.cols();
  require(coefficients.rows() == n && coefficients.cols() == k, ErrorKind::kShapeMismatch,
          "coefficient matrix does not match the network output");
  require(instance_weights.size() == static_cast<std::size_t>(n), ErrorKind::kShapeMismatch,
          "instance weights do not match the batch");

  // Output-layer error d(objective)/d(logits). A clipped probability has a
  // constant loss, so it contributes no gradient.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, cache.logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = instance_weights[static_cast<std::size_t>(i)];
    if (params.head == OutputHead::kSigmoidBinary) {
      const double s = p(i, 1);
      double g = 0.0;
      if (!is_clipped(p(i, 0))) g += coefficients(i, 0) * s;
      if (!is_clipped(p(i, 1))) g += coefficients(i, 1) * (s - 1.0);
      delta(i, 0) = w * g;
    } else {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = coefficients(i, j);
        if (c == 0.0 || is_clipped(p(i, j))) continue;
        delta.row(i) += (w * c) * p.row(i);
        delta(i, j) -= w * c;
      }
    }
  }

  Gradients g = MLPParams::zeros(params.layer_sizes, params.head);
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const Eigen::MatrixXd& input = cache.activations[l];
    g.weights[l] = delta.transpose() * input;
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * params.weights[l];
      delta = (back.array() * (1.0 - input.array().square())).matrix();
    }
  }
  return g;
}

std::vector<std::size_t> predict(const ForwardCache& cache) {
  const Eigen::MatrixXd& p = cache.probabilities;
  std::vector<std::size_t> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < p.cols(); ++j) {
      if (p(i, j) > p(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

SgdState SgdState::zeros_like(const MLPParams& params) {
  SgdState s;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    s.weight_velocity.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.bias_velocity.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return s;
}

void sgd_step(MLPParams& params, const Gradients& grads, SgdState& state, double lr,
              double momentum, bool nesterov) {
  require(std::isfinite(lr) && lr > 0.0, ErrorKind::kInvalidArgument, "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::kInvalidArgument,
          "momentum must be in [0, 1)");
  require(grads.layer_sizes == params.layer_sizes, ErrorKind::kShapeMismatch,
          "gradients and parameters differ in shape");
  if (state.weight_velocity.size() != params.num_layers()) state = SgdState::zeros_like(params);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    state.weight_velocity[l] = momentum * state.weight_velocity[l] + grads.weights[l];
    state.bias_velocity[l] = momentum * state.bias_velocity[l] + grads.biases[l];
    if (nesterov) {
      params.weights[l] -= lr * (grads.weights[l] + momentum * state.weight_velocity[l]);
      params.biases[l] -= lr * (grads.biases[l] + momentum * state.bias_velocity[l]);
    } else {
      params.weights[l] -= lr * state.weight_velocity[l];
      params.biases[l] -= lr * state.bias_velocity[l];
    }
  }
}

}  // namespace cicw
