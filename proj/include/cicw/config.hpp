#pragma once

// Experiment configuration, read from a single JSON document. The schema is
// documented in README.md; unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cicw/class_weights.hpp"
#include "cicw/datagen.hpp"
#include "cicw/instance_weights.hpp"
#include "cicw/mixup.hpp"
#include "cicw/tinynn.hpp"

namespace cicw {

enum class Method { kCE, kCIW, kCICW, kCICWM, kDynCICWM };
std::string to_string(Method method);

enum class DatasetKind { kTwoMoons, kBlobs };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kTwoMoons;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double noise_std = 0.05;
  std::size_t classes = 2;   // blobs only
  double separation = 6.0;   // blobs only
  bool standardize = true;
  NoiseSpec noise;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{10, 20};
  OutputHead head = OutputHead::kSigmoidBinary;
};

struct OptimizerConfig {
  double lr = 0.05;
  double momentum = 0.9;
  bool nesterov = false;
  // (epoch, lr): from that 0-based epoch onward the rate is lr.
  std::vector<std::pair<std::size_t, double>> schedule;

  double rate_at(std::size_t epoch) const;
};

enum class MixConstruction { kIW, kSIW };

struct MixupConfig {
  MixConstruction construction = MixConstruction::kIW;
  MixupLossMode loss = MixupLossMode::kMixupBase;
  double beta = 1.0;
  // Test hook: every example is mixed with itself.
  bool force_identity_permutation = false;
};

struct BurnIn {
  std::size_t amount = 0;
  bool in_epochs = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  OptimizerConfig optimizer;
  Method method = Method::kCE;
  DivergenceSpec instance = DivergenceSpec::kl(1.0);
  ClassDivergence class_divergence = ClassDivergence::kTV;
  double gamma = 0.0;
  MixupConfig mixup;
  BurnIn burn_in;
  std::size_t epochs = 20;
  std::size_t batch_size = 10;
  std::optional<std::size_t> max_iterations;
  std::optional<std::string> output_dir;

  std::size_t iterations_per_epoch() const;
  std::size_t burn_in_iterations() const;
  std::vector<std::size_t> layer_sizes() const;
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

DivergenceSpec parse_divergence(const nlohmann::json& doc);
nlohmann::json to_json(const DivergenceSpec& spec);

}  // namespace cicw
