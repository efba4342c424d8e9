#include "cicw/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cicw/errors.hpp"
#include "cicw/rng.hpp"

namespace cicw {

void Batch::validate() const {
  const auto n = features.rows();
  require(labels.rows() == n, ErrorKind::kShapeMismatch, "batch features and labels differ in rows");
  require(example_ids.size() == static_cast<std::size_t>(n), ErrorKind::kShapeMismatch,
          "batch ids and features differ in rows");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(labels.row(i).minCoeff() >= 0.0 && std::abs(labels.row(i).sum() - 1.0) <= 1e-9,
            ErrorKind::kInvalidArgument, "batch label row " + std::to_string(i) +
                                             " is not on the simplex");
  }
}

Batch apply_mix_plan(const Batch& source, const MixPlan& plan) {
  const std::size_t n = source.size();
  require(plan.partner_index.size() == n && plan.mix_coefficient.size() == n,
          ErrorKind::kShapeMismatch, "mix plan does not match the batch");
  Batch out = source;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = plan.partner_index[i];
    require(j < n, ErrorKind::kInvalidArgument, "mix partner index out of range");
    const double c = plan.mix_coefficient[i];
    const auto r = static_cast<Eigen::Index>(i);
    const auto p = static_cast<Eigen::Index>(j);
    out.features.row(r) = c * source.features.row(r) + (1.0 - c) * source.features.row(p);
    out.labels.row(r) = c * source.labels.row(r) + (1.0 - c) * source.labels.row(p);
  }
  return out;
}

std::vector<std::size_t> uniform_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

namespace {

MixPlan weighted_plan(const SimplexWeights& weights, std::vector<std::size_t> partners) {
  MixPlan plan;
  plan.partner_index = std::move(partners);
  plan.mix_coefficient.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double own = weights[i];
    const double other = weights[plan.partner_index[i]];
    if (!(own + other > 0.0)) {
      fail(ErrorKind::kDegeneratePair, "example " + std::to_string(i) + " and its partner " +
                                           std::to_string(plan.partner_index[i]) +
                                           " both have zero weight");
    }
    plan.mix_coefficient[i] = own / (own + other);
  }
  return plan;
}

void check_weights(const Batch& batch, const SimplexWeights& weights) {
  batch.validate();
  require(weights.size() == batch.size(), ErrorKind::kShapeMismatch,
          "weights and batch differ in length");
}

}  // namespace

MixResult iw_mix_with_permutation(const Batch& batch, const SimplexWeights& weights,
                                  std::span<const std::size_t> permutation) {
  check_weights(batch, weights);
  require(permutation.size() == batch.size(), ErrorKind::kShapeMismatch,
          "permutation and batch differ in length");
  MixPlan plan = weighted_plan(weights, {permutation.begin(), permutation.end()});
  Batch mixed = apply_mix_plan(batch, plan);
  return {std::move(mixed), std::move(plan)};
}

MixResult iw_mix(const Batch& batch, const SimplexWeights& weights, std::uint64_t seed) {
  const std::vector<std::size_t> perm = uniform_permutation(batch.size(), seed);
  return iw_mix_with_permutation(batch, weights, perm);
}

MixResult siw_mix(const Batch& batch, const SimplexWeights& weights, std::uint64_t seed) {
  check_weights(batch, weights);
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.values().begin(), weights.values().end());
  std::vector<std::size_t> partners(batch.size());
  for (auto& p : partners) p = pick(rng);
  MixPlan plan = weighted_plan(weights, std::move(partners));
  Batch mixed = apply_mix_plan(batch, plan);
  return {std::move(mixed), std::move(plan)};
}

MixResult vanilla_mixup(const Batch& batch, double beta, std::uint64_t seed) {
  require(std::isfinite(beta) && beta > 0.0, ErrorKind::kInvalidArgument,
          "mixup beta must be positive");
  batch.validate();
  const std::size_t n = batch.size();
  MixPlan plan;
  plan.partner_index = uniform_permutation(n, derive_seed(seed, streams::kShuffle));
  plan.mix_coefficient.resize(n);
  Rng rng(derive_seed(seed, streams::kMix));
  std::gamma_distribution<double> gamma(beta, 1.0);
  for (double& c : plan.mix_coefficient) {
    // Beta(beta, beta) as a ratio of gamma draws.
    const double a = gamma(rng);
    const double b = gamma(rng);
    c = a + b > 0.0 ? a / (a + b) : 0.5;
  }
  Batch mixed = apply_mix_plan(batch, plan);
  return {std::move(mixed), std::move(plan)};
}

Batch dyn_label_smooth(const Batch& batch, const SimplexWeights& weights,
                       std::span<const std::size_t> predicted_classes) {
  check_weights(batch, weights);
  const std::size_t n = batch.size();
  require(predicted_classes.size() == n, ErrorKind::kShapeMismatch,
          "predicted classes and batch differ in length");
  const auto [lo_it, hi_it] = std::minmax_element(weights.values().begin(), weights.values().end());
  const double lo = *lo_it, hi = *hi_it;
  Batch out = batch;
  const auto k = batch.labels.cols();
  for (std::size_t i = 0; i < n; ++i) {
    require(predicted_classes[i] < static_cast<std::size_t>(k), ErrorKind::kInvalidArgument,
            "predicted class out of range");
    const double trust = hi > lo ? (weights[i] - lo) / (hi - lo) : 1.0;
    const auto r = static_cast<Eigen::Index>(i);
    out.labels.row(r) = trust * batch.labels.row(r);
    out.labels(r, static_cast<Eigen::Index>(predicted_classes[i])) += 1.0 - trust;
  }
  return out;
}

MixupLoss mixup_loss_strategy(MixupLossMode mode, const Batch& mixed,
                              const Eigen::MatrixXd& class_losses,
                              const DivergenceSpec& instance_spec, double gamma) {
  const std::size_t n = mixed.size();
  require(class_losses.rows() == mixed.labels.rows() && class_losses.cols() == mixed.labels.cols(),
          ErrorKind::kShapeMismatch, "class loss matrix does not match the mixed labels");
  MixupLoss out;
  out.losses.resize(n);
  out.class_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::RowVectorXd label_row = mixed.labels.row(r);
    const Eigen::RowVectorXd loss_row = class_losses.row(r);
    std::vector<double> target(label_row.data(), label_row.data() + label_row.size());
    if (mode == MixupLossMode::kMixupReweight) {
      std::vector<double> row(loss_row.data(), loss_row.data() + loss_row.size());
      target = general_class_weights_qp(ClassLossRow(std::move(row)),
                                        ReferenceDistribution(target), gamma)
                   .values;
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) loss += target[j] * loss_row(static_cast<Eigen::Index>(j));
    out.losses[i] = loss;
    out.class_weights[i] = std::move(target);
  }
  out.weights = mode == MixupLossMode::kMixupBase
                    ? SimplexWeights::uniform(n)
                    : instance_weights(LossVector(out.losses), instance_spec);
  return out;
}

}  // namespace cicw
