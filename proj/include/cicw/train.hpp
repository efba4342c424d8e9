#pragma once

// Minibatch training loops for CE, CIW, CICW, CICW-M and Dyn-CICW-M.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cicw/config.hpp"
#include "cicw/datagen.hpp"
#include "cicw/tinynn.hpp"

namespace cicw {

struct MetricsRow {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double train_noisy_loss = 0.0;       // mean CE against the noisy labels
  double clean_subset_accuracy = 0.0;  // uncorrupted training examples
  double noisy_subset_accuracy = 0.0;  // corrupted examples predicted as their noisy label
  double test_clean_accuracy = 0.0;
  // Mean of n * w_i over the epoch; uniform weights give 1. NaN when the
  // epoch saw no example of the subset.
  double mean_weight_corrupted = 0.0;
  double mean_weight_clean = 0.0;
};

/// Handed to the observer after every parameter update.
struct BatchObservation {
  std::size_t iteration = 0;  // 1-based
  std::size_t epoch = 0;      // 1-based
  bool reweighted = false;    // past burn-in
  std::span<const std::size_t> indices;
  // Instance weights on the original minibatch (before any mixing).
  std::span<const double> weights;
  std::vector<bool> corrupted;  // per minibatch row
  const MLPParams* params = nullptr;
};

using TrainObserver = std::function<void(const BatchObservation&)>;

struct TrainData {
  NoisyDataset train;
  NoisyDataset test;
  std::optional<Standardizer> transform;
};

/// Builds the train split (noisy) and test split (clean) for a config.
TrainData make_train_data(const ExperimentConfig& config);

struct TrainResult {
  MLPParams params;
  std::vector<MetricsRow> metrics;
  TrainData data;
};

TrainResult train(const ExperimentConfig& config, const TrainObserver& observer = {});
TrainResult train(const ExperimentConfig& config, TrainData data,
                  const TrainObserver& observer = {});

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace cicw
