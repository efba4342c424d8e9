#pragma once

// Brute-force reference solvers shared by the unit and acceptance tests.
// None of them call into the solvers they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cicw/class_weights.hpp"
#include "cicw/tinynn.hpp"

namespace oracle {

// Minimizer of a unimodal-ish f on [lo, hi]: dense scan, then repeated zoom.
inline double scan_min_1d(const std::function<double(double)>& f, double lo, double hi,
                          int points = 20001, int zooms = 6) {
  double best = lo;
  for (int z = 0; z < zooms; ++z) {
    double best_value = std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
      const double x = lo + step * i;
      const double v = f(x);
      if (v < best_value) {
        best_value = v;
        best = x;
      }
    }
    lo = std::max(lo, best - 2 * step);
    hi = std::min(hi, best + 2 * step);
  }
  return best;
}

// Minimizer of f over the 3-simplex by a zooming grid on (w0, w1).
inline std::vector<double> scan_min_simplex3(const std::function<double(const std::vector<double>&)>& f) {
  double c0 = 1.0 / 3, c1 = 1.0 / 3, radius = 0.5;
  std::vector<double> best{c0, c1, 1 - c0 - c1};
  for (int z = 0; z < 12; ++z) {
    double best_value = std::numeric_limits<double>::infinity();
    const int m = 200;
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m; ++j) {
        const double a = std::clamp(c0 - radius + 2 * radius * i / m, 0.0, 1.0);
        const double b = std::clamp(c1 - radius + 2 * radius * j / m, 0.0, 1.0);
        if (a + b > 1.0) continue;
        const std::vector<double> w{a, b, 1.0 - a - b};
        const double v = f(w);
        if (v < best_value) {
          best_value = v;
          best = w;
        }
      }
    }
    c0 = best[0];
    c1 = best[1];
    radius *= 0.05;
  }
  return best;
}

// min c.v subject to sum(v) = 1 and A v >= b, by enumerating the vertices of
// the polytope: every choice of K-1 active rows of A together with the
// equality. Returns the best feasible vertex value and writes the vertex.
inline double lp_vertex_min(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            Eigen::VectorXd* argmin = nullptr) {
  const Eigen::Index k = c.size();
  const Eigen::Index m = A.rows();
  std::vector<int> pick(static_cast<std::size_t>(m), 0);
  std::fill(pick.end() - (k - 1), pick.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    Eigen::MatrixXd M(k, k);
    Eigen::VectorXd r(k);
    M.row(0).setOnes();
    r(0) = 1.0;
    Eigen::Index row = 1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (pick[static_cast<std::size_t>(i)]) {
        M.row(row) = A.row(i);
        r(row) = b(i);
        ++row;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() < k) continue;
    const Eigen::VectorXd v = lu.solve(r);
    if (((A * v - b).array() < -1e-12).any()) continue;
    const double value = c.dot(v);
    if (value < best) {
      best = value;
      if (argmin) *argmin = v;
    }
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

// Polytope rows (A v >= b) of the linear class problems with a one-hot
// reference at y, written out from each divergence's definition.
inline void linear_constraints(cicw::ClassDivergence kind, std::size_t k, std::size_t y, double gamma,
                        Eigen::MatrixXd& A, Eigen::VectorXd& b) {
  const auto K = static_cast<Eigen::Index>(k);
  const auto Y = static_cast<Eigen::Index>(y);
  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  for (Eigen::Index j = 0; j < K; ++j) rows.emplace_back(Eigen::VectorXd::Unit(K, j), 0.0);
  switch (kind) {
    case cicw::ClassDivergence::kTV:  // |1 - v_y| + sum_{j != y} v_j = 2 (1 - v_y) <= gamma
      rows.emplace_back(Eigen::VectorXd::Unit(K, Y), 1.0 - gamma / 2.0);
      break;
    case cicw::ClassDivergence::kLinf:  // max(|1 - v_y|, max_{j != y} v_j) <= gamma
      rows.emplace_back(Eigen::VectorXd::Unit(K, Y), 1.0 - gamma);
      for (Eigen::Index j = 0; j < K; ++j) {
        if (j != Y) rows.emplace_back(-Eigen::VectorXd::Unit(K, j), -gamma);
      }
      break;
    case cicw::ClassDivergence::kReverseKL:  // -log v_y <= gamma
      rows.emplace_back(Eigen::VectorXd::Unit(K, Y), std::exp(-gamma));
      break;
    default:
      throw std::invalid_argument("not a linear class problem");
  }
  A.resize(static_cast<Eigen::Index>(rows.size()), K);
  b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
    b(static_cast<Eigen::Index>(r)) = rows[r].second;
  }
}

// Euclidean projection onto the probability simplex (sort and threshold).
inline std::vector<double> simplex_projection(std::vector<double> z) {
  std::vector<double> s = z;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    cumulative += s[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (s[j] - candidate > 0.0) theta = candidate;
  }
  for (double& x : z) x = std::max(0.0, x - theta);
  return z;
}

// min L.v over the simplex with ||v - r||^2 <= gamma. The penalized
// minimizer v(s) = P(r - s (L - min L)) moves monotonically away from r as
// the step s grows, so bisect s (in log space) for the constraint to bind.
// Shifting L by its minimum leaves the projection unchanged and keeps the
// cheapest entries exact at large s.
inline std::vector<double> l2_ball_simplex_min(const std::vector<double>& L, const std::vector<double>& r,
                                               double gamma) {
  const double lowest = *std::min_element(L.begin(), L.end());
  auto at = [&](double log_step) {
    std::vector<double> z(L.size());
    for (std::size_t j = 0; j < L.size(); ++j) z[j] = r[j] - std::exp(log_step) * (L[j] - lowest);
    return simplex_projection(z);
  };
  auto dist = [&](const std::vector<double>& v) {
    double d = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) d += (v[j] - r[j]) * (v[j] - r[j]);
    return d;
  };
  double lo = std::log(1e-12), hi = std::log(1e12);
  if (dist(at(hi)) <= gamma) return at(hi);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (dist(at(mid)) > gamma ? hi : lo) = mid;
  }
  return at(lo);
}

inline std::vector<double> l2_ball_simplex_min(const std::vector<double>& L, std::size_t y, double gamma) {
  std::vector<double> e(L.size(), 0.0);
  e[y] = 1.0;
  return l2_ball_simplex_min(L, e, gamma);
}

inline double weighted_objective(const cicw::MLPParams& p, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& coeffs, std::span<const double> w) {
  const Eigen::MatrixXd L = cicw::loss_matrix(cicw::forward(p, x));
  double total = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) total += w[static_cast<std::size_t>(i)] * coeffs.row(i).dot(L.row(i));
  return total;
}

// Largest relative error between an analytic gradient and central
// differences over every parameter, with the usual |a| + |b| + floor scale.
inline double max_fd_relative_error(const cicw::MLPParams& params, const cicw::Gradients& grads,
                                    const Eigen::MatrixXd& x, const Eigen::MatrixXd& coeffs,
                                    std::span<const double> w, double h = 1e-5) {
  double worst = 0.0;
  cicw::MLPParams p = params;
  auto check = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const double up = weighted_objective(p, x, coeffs, w);
    slot = keep - h;
    const double down = weighted_objective(p, x, coeffs, w);
    slot = keep;
    const double numeric = (up - down) / (2 * h);
    const double err = std::abs(numeric - analytic) / std::max(1e-7, std::abs(numeric) + std::abs(analytic));
    worst = std::max(worst, err);
  };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) check(p.weights[l].data()[i], grads.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) check(p.biases[l].data()[i], grads.biases[l].data()[i]);
  }
  return worst;
}

}  // namespace oracle
