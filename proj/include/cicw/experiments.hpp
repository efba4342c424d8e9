#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cicw/config.hpp"
#include "cicw/instance_weights.hpp"
#include "cicw/train.hpp"

namespace cicw {

/// Noisy two-moons setup: 1000 points, std 0.05, 30% flips, tanh 10/20,
/// sigmoid head, SGD 0.05 with heavy-ball momentum 0.9, batch 10, 20 epochs.
/// Reweighting methods use alpha=0.5, mu=0.5 after 6 burn-in epochs.
ExperimentConfig two_moons_config(Method method, std::uint64_t seed);

/// Four standardized Gaussian blobs with 40% symmetric noise, softmax head.
/// Reweighting methods use KL instance weights and TV class weights.
ExperimentConfig blobs_config(Method method, std::uint64_t seed);

struct LevelsetCurve {
  double alpha = 1.0;
  double hyper = 1.0;  // lambda for alpha = 1, mu otherwise

  DivergenceSpec spec() const;
};

struct LevelsetRow {
  double alpha, hyper, loss, weight;
};

/// Weight of the first example of the two-example batch [L, partner] for
/// every curve and every L.
std::vector<LevelsetRow> levelset_export(std::span<const LevelsetCurve> curves,
                                         std::span<const double> losses, double partner);
void write_levelset_csv(std::ostream& out, std::span<const LevelsetRow> rows);

struct Theorem1Report {
  double population_value = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double difference = 0.0;  // estimate - population value
  bool violation = false;   // difference < -3 standard errors
};

/// Monte-Carlo comparison of the expected minibatch optimum with the
/// population optimum over a discrete loss distribution.
Theorem1Report theorem1_check(std::span<const double> support, std::span<const double> masses,
                              const DivergenceSpec& spec, double delta, std::size_t batch_size,
                              std::size_t trials, std::uint64_t seed);

struct MoonsSummary {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> ce;
  std::vector<MetricsRow> ciw;
};

/// CE and CIW runs on noisy two moons per seed. Writes metrics CSVs and, for
/// the first seed, a decision-boundary SVG into `output_dir` when non-empty.
std::vector<MoonsSummary> run_moons(std::span<const std::uint64_t> seeds, const std::string& output_dir);

}  // namespace cicw
