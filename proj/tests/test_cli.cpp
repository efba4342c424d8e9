#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cicw/config.hpp"
#include "cicw/experiments.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_binary;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const fs::path err_file = fs::temp_directory_path() / "cicw_cli_stderr.txt";
  const std::string command = env + " '" + g_binary + "' " + args + " 2>'" + err_file.string() + "'";
  Run r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  for (std::size_t got; (got = fread(buffer, 1, sizeof buffer, pipe)) > 0;) r.out.append(buffer, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_file);
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

bool single_error_line(const std::string& err) {
  return err.rfind("error: kind=", 0) == 0 && err.find('\n') == err.size() - 1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cicw_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("weights subcommand") {
  const Run r = run("weights --losses 2.5,2.5 --family kl --lambda 1");
  CHECK(r.status == 0);
  CHECK(first_line(r.out) == "0.5 0.5");
  CHECK(r.out.find("\nlambda=1,") != std::string::npos);
  CHECK(r.out.find("implied_delta=0,") != std::string::npos);

  const Run alpha = run("weights --losses 0.1,4.9 --family alpha --alpha 2 --mu 5");
  CHECK(alpha.status == 0);
  const Run bregman = run("weights --losses 1,2,3 --family bregman_log --lambda 1");
  CHECK(bregman.status == 0);
}

TEST_CASE("classweights subcommand") {
  const Run r = run("classweights --row 2.0,0.5,1.0 --y 0 --d2 tv --gamma 0.4");
  CHECK(r.status == 0);
  CHECK(first_line(r.out) == "0.8 0.2 0.0");
}

TEST_CASE("usage and error exits") {
  const Run missing = run("train --config missing.json");
  CHECK(missing.status == 2);
  CHECK(single_error_line(missing.err));
  CHECK(missing.err.find("kind=config") != std::string::npos);

  CHECK(run("weights --losses 1,2 --frobnicate").status == 2);
  CHECK(run("").status == 2);
  CHECK(run("weights --losses 1,2 --family nope").status == 2);

  const Run infeasible = run("weights --losses 1,2 --family reverse_kl --mu -5");
  CHECK(infeasible.status != 0);
  CHECK(single_error_line(infeasible.err));

  const fs::path dir = scratch("bad_config");
  std::ofstream(dir / "bad.json") << R"({"seed": 1, "bogus": true})";
  const Run bad = run("train --config '" + (dir / "bad.json").string() + "'");
  CHECK(bad.status == 2);
  CHECK(bad.err.find("bogus") != std::string::npos);
}

TEST_CASE("train is deterministic") {
  cicw::ExperimentConfig c = cicw::blobs_config(cicw::Method::kCICWM, 5);
  c.dataset.n_train = 400;
  c.dataset.n_test = 100;
  c.epochs = 3;
  c.burn_in = cicw::BurnIn{1, true};
  const fs::path dir = scratch("train");
  std::ofstream(dir / "config.json") << cicw::to_json(c).dump(2);

  const std::string config = " --config '" + (dir / "config.json").string() + "'";
  const Run a = run("train" + config + " --output-dir '" + (dir / "a").string() + "'");
  const Run b = run("train" + config + " --output-dir '" + (dir / "b").string() + "'");
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  const std::string csv = slurp(dir / "a" / "metrics.csv");
  CHECK(!csv.empty());
  CHECK(csv == slurp(dir / "b" / "metrics.csv"));
  CHECK(slurp(dir / "a" / "model.ckpt") == slurp(dir / "b" / "model.ckpt"));
  CHECK(slurp(dir / "a" / "model.ckpt").rfind("CIWMLP01", 0) == 0);

  const Run reseeded = run("train" + config + " --seed 6 --output-dir '" + (dir / "c").string() + "'");
  REQUIRE(reseeded.status == 0);
  CHECK(slurp(dir / "c" / "metrics.csv") != csv);

  const Run env = run("train" + config, "CICW_OUTPUT_DIR='" + (dir / "env").string() + "'");
  REQUIRE(env.status == 0);
  CHECK(slurp(dir / "env" / "metrics.csv") == csv);
}

TEST_CASE("levelsets and theorem1 subcommands") {
  const Run r = run("levelsets");
  CHECK(r.status == 0);
  CHECK(first_line(r.out) == "alpha,hyper,loss,weight");
  CHECK(r.out.find("\n1,5,2.5,0.5\n") != std::string::npos);

  const Run t = run("theorem1 --support 1,2,3 --masses 0.5,0.3,0.2 --delta 0.1 --batch 8 --trials 2000 "
                    "--family kl --lambda 1");
  CHECK(t.status == 0);
  CHECK(t.out.find("violation=false") != std::string::npos);
}

TEST_CASE("moons subcommand") {
  const fs::path dir = scratch("moons");
  const Run r = run("moons --seeds 0 --output-dir '" + dir.string() + "'");
  CHECK(r.status == 0);
  CHECK(first_line(r.out) == "seed,ce_test_accuracy,ciw_test_accuracy");
  CHECK(fs::exists(dir / "moons_ce_seed0.csv"));
  CHECK(fs::exists(dir / "moons_ciw_seed0.csv"));
  CHECK(slurp(dir / "moons_seed0.svg").find("<line") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path to cicw binary> [doctest options]\n");
    return 2;
  }
  g_binary = argv[1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  return context.run();
}
