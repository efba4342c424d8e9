// Command-line front end. Every failure prints one line
//   error: kind=<kind> message="<text>"
// and exits 2 for usage/config problems, 3 for solver failures, 1 otherwise.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cicw/checkpoint.hpp"
#include "cicw/class_weights.hpp"
#include "cicw/config.hpp"
#include "cicw/errors.hpp"
#include "cicw/experiments.hpp"
#include "cicw/format.hpp"
#include "cicw/instance_weights.hpp"
#include "cicw/train.hpp"

namespace {

using namespace cicw;

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return s;
}

int report(std::string_view kind, const std::string& message, int code) {
  std::cerr << "error: kind=" << kind << " message=\"" << one_line(message) << "\"\n";
  return code;
}

std::string default_output_dir() {
  const char* env = std::getenv("CICW_OUTPUT_DIR");
  return env && *env ? env : ".";
}

struct DivergenceFlags {
  std::string family = "kl";
  std::optional<double> lambda, mu, alpha;

  void attach(CLI::App* app) {
    app->add_option("--family", family, "kl, reverse_kl, alpha, f_alpha, bregman_log, bregman_squared")
        ->check(CLI::IsMember({"kl", "reverse_kl", "alpha", "f_alpha", "bregman_log", "bregman_squared"}));
    app->add_option("--lambda", lambda, "temperature for kl, f_alpha and bregman families");
    app->add_option("--mu", mu, "multiplier for reverse_kl and alpha");
    app->add_option("--alpha", alpha, "alpha for the alpha and f_alpha families");
  }

  DivergenceSpec spec() const {
    nlohmann::json doc = {{"family", family}};
    if (lambda) doc["lambda"] = *lambda;
    if (mu) doc["mu"] = *mu;
    if (alpha) doc["alpha"] = *alpha;
    return parse_divergence(doc);
  }
};

void print_line(std::span<const double> values) { std::cout << join(values, " ") << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained instance and class reweighting tools"};
  app.require_subcommand(1);

  auto* weights = app.add_subcommand("weights", "instance weights for a loss vector");
  std::vector<double> losses;
  DivergenceFlags div;
  weights->add_option("--losses", losses, "comma-separated losses")->required()->delimiter(',');
  div.attach(weights);

  auto* classweights = app.add_subcommand("classweights", "class weights for one loss row");
  std::vector<double> row;
  std::size_t label = 0;
  std::string d2 = "tv";
  double gamma = 0.0;
  classweights->add_option("--row", row, "comma-separated class losses")->required()->delimiter(',');
  classweights->add_option("--y", label, "annotated class")->required();
  classweights->add_option("--d2", d2, "tv, l2, linf, reverse_kl");
  classweights->add_option("--gamma", gamma, "class radius")->required();

  auto* train_cmd = app.add_subcommand("train", "train from a JSON config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  train_cmd->add_option("--config", config_path, "config file")->required();
  train_cmd->add_option("--seed", seed, "overrides the config seed");
  train_cmd->add_option("--output-dir", output_dir, "overrides output_dir and CICW_OUTPUT_DIR");

  auto* levelsets = app.add_subcommand("levelsets", "weight level sets of a two-example batch");
  std::vector<double> alphas{-1.0, 1.0, 2.0};
  double hyper = 5.0, partner = 2.5, loss_min = 0.1, loss_max = 4.9;
  std::size_t steps = 49;
  std::string levelset_out;
  levelsets->add_option("--alphas", alphas, "comma-separated alphas")->delimiter(',');
  levelsets->add_option("--hyper", hyper, "lambda (alpha = 1) or mu");
  levelsets->add_option("--partner", partner, "loss of the fixed example");
  levelsets->add_option("--loss-min", loss_min);
  levelsets->add_option("--loss-max", loss_max);
  levelsets->add_option("--steps", steps)->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  levelsets->add_option("--out", levelset_out, "CSV path (default stdout)");

  auto* moons = app.add_subcommand("moons", "noisy two-moons CE vs CIW runs");
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  moons->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',');
  moons->add_option("--output-dir", output_dir);

  auto* theorem = app.add_subcommand("theorem1", "Monte-Carlo minibatch bound check");
  std::vector<double> support{1.0, 2.0, 3.0}, masses{0.5, 0.3, 0.2};
  double delta = 0.1;
  std::size_t batch = 8, trials = 5000;
  std::uint64_t theorem_seed = 0;
  DivergenceFlags tdiv;
  tdiv.lambda = 1.0;  // the radius fixes the solution; the multiplier is unused
  theorem->add_option("--support", support)->delimiter(',');
  theorem->add_option("--masses", masses)->delimiter(',');
  theorem->add_option("--delta", delta);
  theorem->add_option("--batch", batch);
  theorem->add_option("--trials", trials);
  theorem->add_option("--seed", theorem_seed);
  tdiv.attach(theorem);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 2);
  }

  try {
    if (*weights) {
      const DivergenceSpec spec = div.spec();
      const LossVector lv(losses);
      if (spec.family == DivergenceFamily::kGenericF) {
        const WeightsWithReport r = generic_fdiv_weights(*spec.generator, lv, spec.temperature);
        print_line(r.weights.values());
        std::cout << r.report.to_record() << '\n';
      } else if (spec.family == DivergenceFamily::kBregman) {
        const WeightsWithReport r = bregman_weights(*spec.bregman, lv, spec.temperature);
        print_line(r.weights.values());
        std::cout << r.report.to_record() << '\n';
      } else {
        const SimplexWeights w = instance_weights(lv, spec);
        print_line(w.values());
        std::cout << kkt_report(lv, w, spec).to_record() << '\n';
      }
    } else if (*classweights) {
      const ClassWeightRow v = class_weights(parse_class_divergence(d2), ClassLossRow(row), label, gamma);
      print_line(v.values);
    } else if (*train_cmd) {
      ExperimentConfig config = load_config(config_path);
      if (seed) config.seed = *seed;
      std::string dir = !output_dir.empty() ? output_dir : config.output_dir.value_or(default_output_dir());
      std::filesystem::create_directories(dir);
      const TrainResult result = train(config);
      const auto csv_path = std::filesystem::path(dir) / "metrics.csv";
      std::ofstream csv(csv_path);
      require(static_cast<bool>(csv), ErrorKind::kIo, "cannot write " + csv_path.string());
      write_metrics_csv(csv, result.metrics);
      save_checkpoint((std::filesystem::path(dir) / "model.ckpt").string(), result.params);
      std::cout << csv_path.string() << '\n';
    } else if (*levelsets) {
      std::vector<LevelsetCurve> curves;
      for (double a : alphas) curves.push_back({a, hyper});
      std::vector<double> grid(steps);
      for (std::size_t i = 0; i < steps; ++i) {
        const auto a = static_cast<double>(i), b = static_cast<double>(steps - 1 - i);
        grid[i] = (loss_min * b + loss_max * a) / static_cast<double>(steps - 1);
        // Land exactly on the partner loss when the grid passes through it.
        if (std::abs(grid[i] - partner) < 1e-9 * std::max(1.0, std::abs(partner))) grid[i] = partner;
      }
      const std::vector<LevelsetRow> rows = levelset_export(curves, grid, partner);
      if (levelset_out.empty()) {
        write_levelset_csv(std::cout, rows);
      } else {
        std::ofstream out(levelset_out);
        require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + levelset_out);
        write_levelset_csv(out, rows);
      }
    } else if (*moons) {
      const std::string dir = output_dir.empty() ? default_output_dir() : output_dir;
      const std::vector<MoonsSummary> runs = run_moons(seeds, dir);
      std::cout << "seed,ce_test_accuracy,ciw_test_accuracy\n";
      for (const MoonsSummary& s : runs) {
        std::cout << s.seed << ',' << shortest(s.ce.back().test_clean_accuracy) << ','
                  << shortest(s.ciw.back().test_clean_accuracy) << '\n';
      }
    } else if (*theorem) {
      const Theorem1Report r =
          theorem1_check(support, masses, tdiv.spec(), delta, batch, trials, theorem_seed);
      std::cout << "population_value=" << shortest(r.population_value) << ",estimate=" << shortest(r.estimate)
                << ",standard_error=" << shortest(r.standard_error) << ",difference=" << shortest(r.difference)
                << ",violation=" << (r.violation ? "true" : "false") << '\n';
    }
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kInvalidArgument ? 2
                     : e.kind() == ErrorKind::kSolverFailure                                    ? 3
                                                                                               : 1;
    return report(to_string(e.kind()), e.what(), code);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 0;
}
