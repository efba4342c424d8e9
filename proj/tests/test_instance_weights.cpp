#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "cicw/errors.hpp"
#include "cicw/instance_weights.hpp"
#include "oracles.hpp"

using namespace cicw;

namespace {

std::vector<double> random_losses(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.01, 5.0);
  std::vector<double> l(n);
  for (double& x : l) x = u(rng);
  return l;
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInternalConsistency;
}

}  // namespace

TEST_CASE("loss vectors reject nonpositive or nonfinite entries") {
  CHECK_THROWS_AS(LossVector({1.0, 0.0}), Error);
  CHECK_THROWS_AS(LossVector({1.0, -2.0}), Error);
  CHECK_THROWS_AS(LossVector({1.0, std::nan("")}), Error);
  CHECK_THROWS_AS(LossVector({}), Error);
  CHECK_THROWS_AS(SimplexWeights({0.5, 0.6}), Error);
}

TEST_CASE("kl weights") {
  const SimplexWeights even = kl_weights(LossVector({2.5, 2.5}), 1.0);
  CHECK(even[0] == 0.5);
  CHECK(even[1] == 0.5);

  for (std::size_t n : {1u, 3u, 7u}) {
    const SimplexWeights w = kl_weights(LossVector(std::vector<double>(n, 3.7)), 0.3);
    for (double x : w.values()) CHECK(x == doctest::Approx(1.0 / n).epsilon(1e-15));
  }

  // Penalized form sum w L + lambda sum w log(2w), minimized by a scan.
  const double w1 = oracle::scan_min_1d(
      [](double a) {
        auto xlogx = [](double t) { return t > 0 ? t * std::log(2 * t) : 0.0; };
        return a * 1.0 + (1 - a) * 2.5 + xlogx(a) + xlogx(1 - a);
      },
      0.0, 1.0);
  const SimplexWeights w = kl_weights(LossVector({1.0, 2.5}), 1.0);
  CHECK(std::abs(w[0] - 0.81757) < 1e-5);
  CHECK(std::abs(w[0] - w1) < 1e-5);
  CHECK(std::abs(w[1] - (1 - w1)) < 1e-5);
}

TEST_CASE("kl weights survive extreme loss spreads") {
  const SimplexWeights w = kl_weights(LossVector({1e-3, 800.0, 1600.0}), 1.0);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(w[2]));
}

TEST_CASE("kl invariances") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> l = random_losses(rng, 2 + t % 7);
    const double lambda = 0.1 + 0.01 * t;
    const SimplexWeights base = kl_weights(LossVector(l), lambda);
    std::vector<double> shifted = l, scaled = l;
    for (double& x : shifted) x += 1.75;
    for (double& x : scaled) x *= 3.0;
    const SimplexWeights s = kl_weights(LossVector(shifted), lambda);
    const SimplexWeights c = kl_weights(LossVector(scaled), 3.0 * lambda);
    for (std::size_t i = 0; i < l.size(); ++i) {
      CHECK(s[i] == doctest::Approx(base[i]).epsilon(1e-12));
      CHECK(c[i] == doctest::Approx(base[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("reverse kl weights") {
  const SimplexWeights w = reverse_kl_weights(LossVector({1.0, 2.5}), 0.5);
  CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const SimplexWeights even = reverse_kl_weights(LossVector({0.4, 0.4, 0.4}), 0.2);
  for (double x : even.values()) CHECK(x == doctest::Approx(1.0 / 3));
  CHECK(kind_of([] { reverse_kl_weights(LossVector({1.0, 2.5}), -1.0); }) ==
        ErrorKind::kInfeasibleHyperparameter);
  try {
    reverse_kl_weights(LossVector({1.0, 2.5}), -1.0);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("-1") != std::string::npos);
  }
}

TEST_CASE("alpha weights") {
  const SimplexWeights half = alpha_weights(LossVector({1.0, 2.5}), 0.5, 0.5);
  const double a = std::pow(0.5 * 1.0 + 0.5, -2.0), b = std::pow(0.5 * 2.5 + 0.5, -2.0);
  CHECK(std::abs(half[0] - 0.75385) < 1e-5);
  CHECK(half[0] == doctest::Approx(a / (a + b)).epsilon(1e-13));

  const SimplexWeights two = alpha_weights(LossVector({1.0, 2.5}), 2.0, 2.0);
  CHECK(two[0] == 1.0);
  CHECK(two[1] == 0.0);

  CHECK(kind_of([] { alpha_weights(LossVector({3.0, 4.0}), 2.0, 2.0); }) == ErrorKind::kDegenerateBatch);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const LossVector l(random_losses(rng, 2 + t % 6));
    const double mu = 0.5 + 0.05 * t;
    const SimplexWeights kl = kl_weights(l, mu);
    for (double alpha : {1.0 - 1e-4, 1.0 + 1e-4}) {
      const SimplexWeights near = alpha_weights(l, alpha, mu);
      for (std::size_t i = 0; i < l.size(); ++i) CHECK(std::abs(near[i] - kl[i]) < 1e-3);
    }
    const SimplexWeights rkl = reverse_kl_weights(l, mu);
    for (double alpha : {-1e-4, 1e-4}) {
      const SimplexWeights near = alpha_weights(l, alpha, mu);
      for (std::size_t i = 0; i < l.size(); ++i) CHECK(std::abs(near[i] - rkl[i]) < 1e-3);
    }
  }
}

TEST_CASE("alpha family dispatch") {
  CHECK(DivergenceSpec::alpha_family(1.0, 2.0).family == DivergenceFamily::kKL);
  CHECK(DivergenceSpec::alpha_family(0.0, 2.0).family == DivergenceFamily::kReverseKL);
  CHECK_THROWS_AS(DivergenceSpec::kl(0.0).validate(), Error);
  CHECK_THROWS_AS(DivergenceSpec::alpha_family(std::nan(""), 1.0).validate(), Error);
}

TEST_CASE("heavier tails for smaller alpha") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l = random_losses(rng, 3 + t % 5);
    std::sort(l.begin(), l.end());
    if (std::adjacent_find(l.begin(), l.end()) != l.end()) continue;
    const LossVector lv(l);
    const double mu = l.back() + 0.5;  // keep alpha = 2 unclamped
    double previous = 0.0;
    for (double alpha : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
      const SimplexWeights w = instance_weights(lv, DivergenceSpec::alpha_family(alpha, mu));
      const double top = *std::max_element(w.values().begin(), w.values().end());
      CHECK(top > previous);
      previous = top;
    }
  }
}

TEST_CASE("generic f-divergence solver") {
  const LossVector l({1.0, 2.5});
  const WeightsWithReport kl = generic_fdiv_weights(kl_generator(), l, 1.0);
  const SimplexWeights ref = kl_weights(l, 1.0);
  CHECK(std::abs(kl.weights[0] - ref[0]) < 1e-9);
  CHECK(std::abs(kl.weights[1] - ref[1]) < 1e-9);

  // f = -log t gives w_i = lambda / (n (L_i + mu)); lambda = 2 makes mu = 0.5.
  const WeightsWithReport rkl = generic_fdiv_weights(reverse_kl_generator(), l, 2.0);
  const SimplexWeights rref = reverse_kl_weights(l, 0.5);
  CHECK(std::abs(rkl.report.mu - 0.5) < 1e-9);
  CHECK(std::abs(rkl.weights[0] - rref[0]) < 1e-9);
  CHECK(std::abs(rkl.weights[1] - rref[1]) < 1e-9);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lam(0.2, 3.0);
  const double alphas[] = {-1.0, 0.5, 2.0};
  for (int t = 0; t < 1000; ++t) {
    const double alpha = alphas[t % 3];
    const LossVector lv(random_losses(rng, 2 + static_cast<std::size_t>(rng() % 7)));
    const double lambda = lam(rng);
    const WeightsWithReport g = generic_fdiv_weights(alpha_generator(alpha), lv, lambda);
    // The root multiplier m maps onto the closed-form offset
    // (1 - alpha) m + lambda / alpha.
    const double offset = (1.0 - alpha) * g.report.mu + lambda / alpha;
    std::vector<double> closed(lv.size());
    if (offset > 0.0) {
      closed = alpha_weights(lv, alpha, offset).vector();
    } else {
      double z = 0.0;
      for (std::size_t i = 0; i < lv.size(); ++i) {
        const double base = (1.0 - alpha) * lv[i] + offset;
        closed[i] = base > 0.0 ? std::pow(base, 1.0 / (alpha - 1.0)) : 0.0;
        z += closed[i];
      }
      for (double& x : closed) x /= z;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) err = std::max(err, std::abs(closed[i] - g.weights[i]));
    CHECK(err < 1e-7);
    CHECK(g.report.stationarity_residual < 1e-6);
    CHECK(std::abs(sum(g.weights.values()) - 1.0) < 1e-9);
  }
}

TEST_CASE("bregman solver") {
  const LossVector l({1.0, 2.5});
  const WeightsWithReport logb = bregman_weights(log_link_bregman(), l, 1.0);
  const SimplexWeights ref = kl_weights(l, 1.0);
  CHECK(std::abs(logb.weights[0] - ref[0]) < 1e-7);

  const WeightsWithReport eq = bregman_weights(squared_euclidean_bregman(), LossVector({2.0, 2.0, 2.0}), 0.7);
  for (double x : eq.weights.values()) CHECK(x == doctest::Approx(1.0 / 3));

  // Penalized form sum w L + lambda * 0.5 ||w - u||^2 on the simplex.
  const std::vector<double> L{1.0, 2.0, 4.0};
  const std::vector<double> best = oracle::scan_min_simplex3([&](const std::vector<double>& w) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += w[i] * L[i] + 2.0 * 0.5 * (w[i] - 1.0 / 3) * (w[i] - 1.0 / 3);
    return v;
  });
  const WeightsWithReport sq = bregman_weights(squared_euclidean_bregman(), LossVector(L), 2.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(sq.weights[i] - best[i]) < 1e-5);
}

TEST_CASE("implied radius") {
  for (const DivergenceSpec& s : {DivergenceSpec::kl(1.0), DivergenceSpec::reverse_kl(1.0),
                                  DivergenceSpec::alpha_family(0.5, 1.0),
                                  DivergenceSpec::bregman_family(squared_euclidean_bregman(), 1.0)}) {
    CHECK(implied_radius(SimplexWeights::uniform(4), s) == doctest::Approx(0.0).scale(1));
  }
  CHECK(implied_radius(SimplexWeights({1.0, 0.0}), DivergenceSpec::kl(1.0)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::isinf(implied_radius(SimplexWeights({1.0, 0.0}), DivergenceSpec::reverse_kl(1.0))));
  const SimplexWeights w({0.8176, 0.1824});
  CHECK(std::abs(implied_radius(w, DivergenceSpec::kl(1.0)) -
                 (0.8176 * std::log(2 * 0.8176) + 0.1824 * std::log(2 * 0.1824))) < 1e-6);
}

TEST_CASE("solver properties on random batches") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> hyper(0.2, 3.0);
  for (int fam = 0; fam < 5; ++fam) {
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> l = random_losses(rng, 1 + static_cast<std::size_t>(rng() % 8));
      const LossVector lv(l);
      DivergenceSpec spec;
      const double h = hyper(rng);
      switch (fam) {
        case 0: spec = DivergenceSpec::kl(h); break;
        case 1: spec = DivergenceSpec::reverse_kl(h); break;
        case 2: spec = DivergenceSpec::alpha_family(-1.0, h); break;
        case 3: spec = DivergenceSpec::alpha_family(0.5, h); break;
        default: spec = DivergenceSpec::alpha_family(2.0, lv.min() + h); break;
      }
      const SimplexWeights w = instance_weights(lv, spec);
      CHECK(std::abs(sum(w.values()) - 1.0) < 1e-9);
      for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(w[i] >= 0.0);
        for (std::size_t j = 0; j < l.size(); ++j) {
          if (l[i] < l[j]) {
            CHECK(w[i] >= w[j]);
            if (w[j] > 0.0) CHECK(w[i] > w[j]);
          }
        }
      }
      // Permutation equivariance under a reversal.
      std::vector<double> r(l.rbegin(), l.rend());
      const SimplexWeights wr = instance_weights(LossVector(r), spec);
      for (std::size_t i = 0; i < l.size(); ++i) CHECK(wr[l.size() - 1 - i] == doctest::Approx(w[i]).epsilon(1e-12));

      const KKTReport k = kkt_report(lv, w, spec);
      CHECK(k.stationarity_residual < 1e-6);
      for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(k.nu[i] >= 0.0);
        if (k.nu[i] > 0.0) CHECK(w[i] == 0.0);
      }
      CHECK(k.implied_delta >= 0.0);
    }
  }
}

TEST_CASE("single-example batches") {
  for (const DivergenceSpec& s : {DivergenceSpec::kl(1.0), DivergenceSpec::reverse_kl(1.0),
                                  DivergenceSpec::alpha_family(2.0, 0.1)}) {
    const SimplexWeights w = instance_weights(LossVector({4.2}), s);
    CHECK(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
}

TEST_CASE("kkt record is flat key=value text") {
  const LossVector l({1.0, 2.5});
  const SimplexWeights w = kl_weights(l, 1.0);
  const std::string rec = kkt_report(l, w, DivergenceSpec::kl(1.0)).to_record();
  CHECK(rec.find("lambda=1") == 0);
  CHECK(rec.find('\n') == std::string::npos);
}

TEST_CASE("radius-constrained weights hit the requested radius") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const LossVector lv(random_losses(rng, 2 + t % 6));
    for (const DivergenceSpec& s : {DivergenceSpec::kl(1.0), DivergenceSpec::reverse_kl(1.0),
                                    DivergenceSpec::alpha_family(0.5, 1.0)}) {
      const SimplexWeights w = radius_constrained_weights(lv, s, 0.05);
      CHECK(implied_radius(w, s) == doctest::Approx(0.05).epsilon(1e-6));
    }
  }
}
