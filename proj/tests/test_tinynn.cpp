#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cicw/checkpoint.hpp"
#include "cicw/errors.hpp"
#include "cicw/tinynn.hpp"
#include "oracles.hpp"

using namespace cicw;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Random class-weight rows on the simplex.
Eigen::MatrixXd simplex_rows(Eigen::Index rows, Eigen::Index k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e;
  Eigen::MatrixXd m(rows, k);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = e(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

std::vector<double> simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e;
  std::vector<double> w(n);
  double z = 0.0;
  for (double& x : w) z += x = e(rng);
  for (double& x : w) x /= z;
  return w;
}

Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  return m;
}

double max_abs_difference(const Gradients& a, const Gradients& b) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    worst = std::max(worst, (a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("zero parameters give uniform outputs") {
  const MLPParams s = MLPParams::zeros({2, 10, 20, 1}, OutputHead::kSigmoidBinary);
  const ForwardCache c = forward(s, Eigen::MatrixXd::Random(4, 2));
  CHECK(c.probabilities.rows() == 4);
  CHECK(c.probabilities.cols() == 2);
  CHECK((c.probabilities.array() == 0.5).all());

  const MLPParams m = MLPParams::zeros({3, 5, 4}, OutputHead::kSoftmax);
  const Eigen::MatrixXd L = loss_matrix(forward(m, Eigen::MatrixXd::Random(6, 3)));
  CHECK(((L.array() - std::log(4.0)).abs() < 1e-15).all());
}

TEST_CASE("forward shapes and normalization") {
  std::mt19937_64 rng(1);
  const MLPParams p = MLPParams::initialize({2, 4, 3}, OutputHead::kSoftmax, 7);
  const ForwardCache c = forward(p, gaussian(5, 2, rng));
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(c.probabilities.row(i).sum() - 1.0) < 1e-12);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(5, 3)), Error);

  MLPParams one = MLPParams::zeros({3, 3}, OutputHead::kSoftmax);
  one.weights[0] = gaussian(3, 3, rng);
  one.biases[0] = gaussian(3, 1, rng);
  const Eigen::MatrixXd x = gaussian(4, 3, rng);
  const ForwardCache lin = forward(one, x);
  const Eigen::MatrixXd expected = (x * one.weights[0].transpose()).rowwise() + one.biases[0].transpose();
  CHECK((lin.logits - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("initialization bounds and determinism") {
  const MLPParams a = MLPParams::initialize({2, 10, 20, 1}, OutputHead::kSigmoidBinary, 3);
  const MLPParams b = MLPParams::initialize({2, 10, 20, 1}, OutputHead::kSigmoidBinary, 3);
  CHECK(parameter_distance(a, b) == 0.0);
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.layer_sizes[l]));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
    CHECK(a.biases[l].cwiseAbs().maxCoeff() <= bound);
  }
  CHECK(parameter_distance(a, MLPParams::initialize({2, 10, 20, 1}, OutputHead::kSigmoidBinary, 4)) > 0.0);
  CHECK(a.num_classes() == 2);
}

TEST_CASE("loss matrix against per-class recomputation") {
  std::mt19937_64 rng(2);
  for (OutputHead head : {OutputHead::kSoftmax, OutputHead::kSigmoidBinary}) {
    const std::size_t out = head == OutputHead::kSoftmax ? 4 : 1;
    const MLPParams p = MLPParams::initialize({3, 6, out}, head, 11);
    const Eigen::MatrixXd x = gaussian(7, 3, rng, 2.0);
    const ForwardCache c = forward(p, x);
    const Eigen::MatrixXd L = loss_matrix(c);
    const std::size_t k = p.num_classes();
    REQUIRE(L.cols() == static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      // Recompute the network output by hand from the raw parameters.
      Eigen::VectorXd a = x.row(i).transpose();
      for (std::size_t l = 0; l + 1 < p.num_layers(); ++l) a = (p.weights[l] * a + p.biases[l]).array().tanh();
      const Eigen::VectorXd z = p.weights.back() * a + p.biases.back();
      for (std::size_t j = 0; j < k; ++j) {
        double prob;
        if (head == OutputHead::kSoftmax) {
          prob = std::exp(z(static_cast<Eigen::Index>(j)) - z.maxCoeff()) / (z.array() - z.maxCoeff()).exp().sum();
        } else {
          const double s = 1.0 / (1.0 + std::exp(-z(0)));
          prob = j == 1 ? s : 1.0 - s;
        }
        prob = std::clamp(prob, 1e-12, 1.0 - 1e-12);
        CHECK(std::abs(L(i, static_cast<Eigen::Index>(j)) + std::log(prob)) < 1e-12);
        CHECK(L(i, static_cast<Eigen::Index>(j)) == per_example_loss(c, static_cast<std::size_t>(i), j));
      }
    }
  }
}

TEST_CASE("weighted backward matches finite differences") {
  std::mt19937_64 rng(3);
  {
    const MLPParams p = MLPParams::initialize({2, 4, 3}, OutputHead::kSoftmax, 5);
    const Eigen::MatrixXd x = gaussian(6, 2, rng);
    const Eigen::MatrixXd v = simplex_rows(6, 3, rng);
    const std::vector<double> w = simplex(6, rng);
    const Gradients g = weighted_backward(p, forward(p, x), v, w);
    CHECK(oracle::max_fd_relative_error(p, g, x, v, w) < 1e-4);
  }
  std::uniform_int_distribution<int> width(1, 6), depth(0, 2), rows(1, 8), classes(2, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const OutputHead head = trial % 2 ? OutputHead::kSigmoidBinary : OutputHead::kSoftmax;
    const std::size_t k = head == OutputHead::kSoftmax ? static_cast<std::size_t>(classes(rng)) : 2;
    std::vector<std::size_t> sizes{static_cast<std::size_t>(width(rng))};
    for (int h = depth(rng); h >= 0; --h) sizes.push_back(static_cast<std::size_t>(width(rng)));
    sizes.push_back(head == OutputHead::kSoftmax ? k : 1);
    const MLPParams p = MLPParams::initialize(sizes, head, 100 + static_cast<std::uint64_t>(trial));
    const auto n = rows(rng);
    const Eigen::MatrixXd x = gaussian(n, static_cast<Eigen::Index>(sizes.front()), rng);
    const Eigen::MatrixXd v = simplex_rows(n, static_cast<Eigen::Index>(k), rng);
    const std::vector<double> w = simplex(static_cast<std::size_t>(n), rng);
    const Gradients g = weighted_backward(p, forward(p, x), v, w);
    CAPTURE(trial);
    CHECK(oracle::max_fd_relative_error(p, g, x, v, w) < 1e-4);
  }
}

TEST_CASE("weighted backward linearity") {
  std::mt19937_64 rng(4);
  const MLPParams p = MLPParams::initialize({2, 5, 3}, OutputHead::kSoftmax, 9);
  const Eigen::MatrixXd x = gaussian(4, 2, rng);
  const std::vector<std::size_t> labels{0, 2, 1, 2};
  const Eigen::MatrixXd y = one_hot(labels, 3);
  const ForwardCache c = forward(p, x);
  const std::vector<double> uniform(4, 0.25);
  const Gradients mean = weighted_backward(p, c, y, uniform);

  Gradients sum = MLPParams::zeros(p.layer_sizes, p.head);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> e(4, 0.0);
    e[k] = 1.0;
    const Gradients single = weighted_backward(p, c, y, e);
    // The same example in a batch of one.
    const auto row = static_cast<Eigen::Index>(k);
    const Gradients alone = weighted_backward(p, forward(p, x.row(row)), y.row(row), std::vector<double>{1.0});
    CHECK(max_abs_difference(single, alone) < 1e-14);
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
      sum.weights[l] += 0.25 * single.weights[l];
      sum.biases[l] += 0.25 * single.biases[l];
    }
  }
  CHECK(max_abs_difference(mean, sum) < 1e-12);
}

TEST_CASE("sgd steps") {
  std::mt19937_64 rng(5);
  const MLPParams p0 = MLPParams::initialize({2, 3, 2}, OutputHead::kSoftmax, 1);
  Gradients g = MLPParams::zeros(p0.layer_sizes, p0.head);
  for (std::size_t l = 0; l < g.num_layers(); ++l) {
    g.weights[l] = gaussian(g.weights[l].rows(), g.weights[l].cols(), rng);
    g.biases[l] = gaussian(g.biases[l].size(), 1, rng);
  }

  {
    MLPParams p = p0;
    SgdState s = SgdState::zeros_like(p);
    sgd_step(p, g, s, 0.1, 0.0);
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
      CHECK((p.weights[l] - (p0.weights[l] - 0.1 * g.weights[l])).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  const double lr = 0.05, m = 0.9;
  for (bool nesterov : {true, false}) {
    MLPParams p = p0;
    SgdState s = SgdState::zeros_like(p);
    sgd_step(p, g, s, lr, m, nesterov);
    sgd_step(p, g, s, lr, m, nesterov);
    // Unrolled: heavy ball moves g then (1 + m) g; Nesterov moves (1 + m) g
    // then (1 + m + m^2) g.
    const double factor = nesterov ? (1 + m) + (1 + m + m * m) : 1 + (1 + m);
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
      CHECK((p0.weights[l] - p.weights[l] - lr * factor * g.weights[l]).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((p0.biases[l] - p.biases[l] - lr * factor * g.biases[l]).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((s.weight_velocity[l] - (1 + m) * g.weights[l]).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  {
    MLPParams p = p0;
    SgdState s = SgdState::zeros_like(p);
    sgd_step(p, MLPParams::zeros(p.layer_sizes, p.head), s, 0.1, 0.9);
    CHECK(parameter_distance(p, p0) == 0.0);

    // With built-up velocity a zero gradient decays it by m.
    sgd_step(p, g, s, 0.1, 0.9, false);
    const SgdState before = s;
    sgd_step(p, MLPParams::zeros(p.layer_sizes, p.head), s, 0.1, 0.9, false);
    CHECK((s.weight_velocity[0] - 0.9 * before.weight_velocity[0]).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("checkpoint round trip") {
  for (OutputHead head : {OutputHead::kSoftmax, OutputHead::kSigmoidBinary}) {
    const MLPParams p = MLPParams::initialize({2, 10, 20, head == OutputHead::kSoftmax ? 3u : 1u}, head, 8);
    std::stringstream buffer;
    write_checkpoint(buffer, p);
    const std::string bytes = buffer.str();
    CHECK(bytes.substr(0, 8) == "CIWMLP01");
    std::size_t values = 0;
    for (std::size_t l = 0; l < p.num_layers(); ++l) values += p.weights[l].size() + p.biases[l].size();
    CHECK(bytes.size() == 8 + 4 + 4 + 8 * p.layer_sizes.size() + 8 * values);
    const MLPParams q = read_checkpoint(buffer);
    CHECK(q.head == p.head);
    CHECK(q.layer_sizes == p.layer_sizes);
    CHECK(parameter_distance(p, q) == 0.0);
  }
  std::stringstream bad("NOTMAGIC");
  CHECK_THROWS_AS(read_checkpoint(bad), Error);
  std::stringstream truncated(std::string("CIWMLP01\x01\x00", 10));
  CHECK_THROWS_AS(read_checkpoint(truncated), Error);
}
