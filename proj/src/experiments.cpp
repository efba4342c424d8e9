#include "cicw/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"
#include "cicw/kernels.hpp"
#include "cicw/oracle.hpp"
#include "cicw/rng.hpp"
#include "cicw/svg.hpp"

namespace cicw {

ExperimentConfig two_moons_config(Method method, std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.method = method;
  c.dataset.kind = DatasetKind::kTwoMoons;
  c.dataset.n_train = 1000;
  c.dataset.n_test = 1000;
  c.dataset.noise_std = 0.05;
  c.dataset.noise = {NoiseKind::kSymmetric, 0.3, {}};
  c.model = {{10, 20}, OutputHead::kSigmoidBinary};
  c.optimizer = {0.05, 0.9, false, {}};
  c.instance = DivergenceSpec::alpha_family(0.5, 0.5);
  c.burn_in = {6, true};
  c.epochs = 20;
  c.batch_size = 10;
  return c;
}

ExperimentConfig blobs_config(Method method, std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.method = method;
  c.dataset.kind = DatasetKind::kBlobs;
  c.dataset.classes = 4;
  c.dataset.n_train = 2000;
  c.dataset.n_test = 2000;
  c.dataset.separation = 3.0;
  c.dataset.noise_std = 1.0;
  c.dataset.noise = {NoiseKind::kSymmetric, 0.4, {}};
  c.model = {{32}, OutputHead::kSoftmax};
  c.optimizer = {0.05, 0.9, false, {}};
  c.instance = DivergenceSpec::kl(1.0);
  c.class_divergence = ClassDivergence::kTV;
  c.gamma = method == Method::kCICW || method == Method::kCICWM ? 0.4 : 0.0;
  c.burn_in = {2, true};
  c.epochs = 20;
  c.batch_size = 32;
  return c;
}

DivergenceSpec LevelsetCurve::spec() const {
  return alpha == 1.0 ? DivergenceSpec::kl(hyper) : DivergenceSpec::alpha_family(alpha, hyper);
}

std::vector<LevelsetRow> levelset_export(std::span<const LevelsetCurve> curves,
                                         std::span<const double> losses, double partner) {
  std::vector<DivergenceSpec> specs;
  for (const LevelsetCurve& c : curves) specs.push_back(c.spec());
  const Eigen::MatrixXd grid = levelset_grid(specs, losses, partner);
  std::vector<LevelsetRow> rows;
  for (std::size_t r = 0; r < curves.size(); ++r) {
    for (std::size_t j = 0; j < losses.size(); ++j) {
      rows.push_back({curves[r].alpha, curves[r].hyper, losses[j],
                      grid(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))});
    }
  }
  return rows;
}

void write_levelset_csv(std::ostream& out, std::span<const LevelsetRow> rows) {
  out << "alpha,hyper,loss,weight\n";
  for (const LevelsetRow& r : rows) {
    out << shortest(r.alpha) << ',' << shortest(r.hyper) << ',' << shortest(r.loss) << ','
        << shortest(r.weight) << '\n';
  }
}

Theorem1Report theorem1_check(std::span<const double> support, std::span<const double> masses,
                              const DivergenceSpec& spec, double delta, std::size_t batch_size,
                              std::size_t trials, std::uint64_t seed) {
  require(!support.empty() && support.size() <= 10, ErrorKind::kInvalidArgument,
          "population support must have 1..10 points");
  require(masses.size() == support.size(), ErrorKind::kShapeMismatch,
          "support and masses differ in length");
  require(trials >= 1000, ErrorKind::kInvalidArgument, "theorem1_check needs at least 1000 trials");
  require(batch_size >= 1, ErrorKind::kInvalidArgument, "batch size must be >= 1");
  require(delta >= 0.0, ErrorKind::kInvalidArgument, "radius must be nonnegative");
  double total = 0.0;
  for (double m : masses) {
    require(m > 0.0, ErrorKind::kInvalidArgument, "population masses must be positive");
    total += m;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::kInvalidArgument, "population masses must sum to 1");

  Theorem1Report report;
  if (support.size() == 1) {
    report.population_value = report.estimate = support[0];
    return report;
  }
  const std::vector<double> q = oracle_weights(support, masses, spec, delta);
  for (std::size_t i = 0; i < support.size(); ++i) report.population_value += q[i] * support[i];

  Rng rng(derive_seed(seed, streams::kTheorem));
  std::discrete_distribution<std::size_t> draw(masses.begin(), masses.end());
  std::vector<double> batch(batch_size);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& l : batch) l = support[draw(rng)];
    const LossVector losses(batch);
    const double value = weighted_loss(losses, radius_constrained_weights(losses, spec, delta));
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(trials);
  report.estimate = sum / n;
  const double var = std::max(0.0, (sum_sq - n * report.estimate * report.estimate) / (n - 1.0));
  report.standard_error = std::sqrt(var / n);
  report.difference = report.estimate - report.population_value;
  report.violation = report.difference < -3.0 * report.standard_error;
  return report;
}

std::vector<MoonsSummary> run_moons(std::span<const std::uint64_t> seeds, const std::string& output_dir) {
  namespace fs = std::filesystem;
  if (!output_dir.empty()) fs::create_directories(output_dir);
  auto write = [&](const std::string& name, const std::vector<MetricsRow>& rows) {
    std::ofstream out(fs::path(output_dir) / name);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + name + " in " + output_dir);
    write_metrics_csv(out, rows);
  };
  std::vector<MoonsSummary> out;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    MoonsSummary summary;
    summary.seed = seeds[s];
    TrainResult ce = train(two_moons_config(Method::kCE, seeds[s]));
    TrainResult ciw = train(two_moons_config(Method::kCIW, seeds[s]));
    summary.ce = ce.metrics;
    summary.ciw = ciw.metrics;
    if (!output_dir.empty()) {
      const std::string tag = "seed" + std::to_string(seeds[s]);
      write("moons_ce_" + tag + ".csv", ce.metrics);
      write("moons_ciw_" + tag + ".csv", ciw.metrics);
      if (s == 0) {
        const GridBox box;
        const Standardizer* transform = ce.data.transform ? &*ce.data.transform : nullptr;
        std::vector<SvgPanel> panels;
        panels.push_back({"CE", contour_segments(decision_grid(ce.params, box, 200, transform), box, 0.5)});
        panels.push_back({"CIW (alpha=0.5, mu=0.5)",
                          contour_segments(decision_grid(ciw.params, box, 200, transform), box, 0.5)});
        // Points are drawn in raw coordinates.
        Eigen::MatrixXd raw = ce.data.train.features;
        if (transform) {
          raw.array().rowwise() *= transform->scale.array();
          raw.rowwise() += transform->mean;
        }
        std::ofstream svg(fs::path(output_dir) / ("moons_" + tag + ".svg"));
        require(static_cast<bool>(svg), ErrorKind::kIo, "cannot write the SVG in " + output_dir);
        write_decision_svg(svg, box, raw, ce.data.train.noisy_labels, ce.data.train.corrupted, panels);
      }
    }
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace cicw
