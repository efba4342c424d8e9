#pragma once

// Mixed minibatches built from instance weights: IW-Mix (shared random
// permutation), SIW-Mix (importance-sampled partners), vanilla Beta mixup,
// and the weight-driven label smoothing used before vanilla mixup.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cicw/class_weights.hpp"
#include "cicw/instance_weights.hpp"

namespace cicw {

struct Batch {
  Eigen::MatrixXd features;  // n x d
  Eigen::MatrixXd labels;    // n x K, simplex rows
  std::vector<std::size_t> example_ids;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  void validate() const;
};

/// Row i of a mixed batch is c_i * row_i + (1 - c_i) * row_{partner_i}.
struct MixPlan {
  std::vector<std::size_t> partner_index;
  std::vector<double> mix_coefficient;
};

struct MixResult {
  Batch batch;
  MixPlan plan;
};

/// Rebuilds a mixed batch from its source and plan. Example ids are kept
/// from the source rows.
Batch apply_mix_plan(const Batch& source, const MixPlan& plan);

std::vector<std::size_t> uniform_permutation(std::size_t n, std::uint64_t seed);

MixResult iw_mix(const Batch& batch, const SimplexWeights& weights, std::uint64_t seed);
MixResult iw_mix_with_permutation(const Batch& batch, const SimplexWeights& weights,
                                  std::span<const std::size_t> permutation);
MixResult siw_mix(const Batch& batch, const SimplexWeights& weights, std::uint64_t seed);
MixResult vanilla_mixup(const Batch& batch, double beta, std::uint64_t seed);

/// Replaces labels with w_hat_i * y_i + (1 - w_hat_i) * onehot(pred_i), where
/// w_hat is min-max normalized; equal weights give w_hat = 1.
Batch dyn_label_smooth(const Batch& batch, const SimplexWeights& weights,
                       std::span<const std::size_t> predicted_classes);

enum class MixupLossMode { kMixupBase, kMixupReweight };

struct MixupLoss {
  std::vector<double> losses;                  // per mixed example
  SimplexWeights weights = SimplexWeights::uniform(1);
  std::vector<std::vector<double>> class_weights;  // n x K; the mixed labels for MixupBase
};

/// `class_losses` is the n x K loss matrix of the model on the mixed features.
MixupLoss mixup_loss_strategy(MixupLossMode mode, const Batch& mixed,
                              const Eigen::MatrixXd& class_losses,
                              const DivergenceSpec& instance_spec, double gamma);

}  // namespace cicw
