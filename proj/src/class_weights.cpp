#include "cicw/class_weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"

namespace cicw {
namespace {

void check_index(const ClassLossRow& row, std::size_t y) {
  require(y < row.size(), ErrorKind::kInvalidArgument,
          "annotated class " + std::to_string(y) + " out of range for K=" +
              std::to_string(row.size()));
}

void check_gamma(double gamma, double upper, const char* solver) {
  require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= upper, ErrorKind::kInvalidArgument,
          std::string(solver) + " needs gamma in [0, " + shortest(upper) + "], got " + shortest(gamma));
}

// Lowest-index minimizer.
std::size_t argmin(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

ClassWeightRow one_hot_row(std::size_t k, std::size_t y) {
  ClassWeightRow r;
  r.values.assign(k, 0.0);
  r.values[y] = 1.0;
  return r;
}

// Mass `moved` taken from y and placed on the lowest-loss class.
ClassWeightRow two_point(const ClassLossRow& row, std::size_t y, double moved) {
  const std::size_t best = argmin(row.values());
  if (row[y] <= row[best] || moved == 0.0) return one_hot_row(row.size(), y);
  ClassWeightRow r = one_hot_row(row.size(), y);
  r.values[y] = 1.0 - moved;
  r.values[best] = moved;
  r.active_constraint = true;
  return r;
}

// KKT system of the squared-l2 problem restricted to `support` (which holds
// y): v_j = e_j - (L_j + mu)/lambda with the radius constraint active.
struct SupportSolution {
  std::vector<double> v;
  double mu = 0.0;
  double lambda = 0.0;
  bool support_positive = false;  // every support entry other than y > 0
  bool y_positive = false;
  bool duals_nonnegative = false;
};

SupportSolution solve_on_support(const ClassLossRow& row, std::size_t y,
                                 const std::vector<std::size_t>& support, double gamma) {
  SupportSolution s;
  double mean = 0.0;
  for (std::size_t j : support) mean += row[j];
  mean /= static_cast<double>(support.size());
  double spread = 0.0;
  for (std::size_t j : support) spread += (row[j] - mean) * (row[j] - mean);
  s.mu = -mean;
  s.lambda = std::sqrt(spread / gamma);
  s.v.assign(row.size(), 0.0);
  if (!(s.lambda > 0.0)) return s;
  s.support_positive = true;
  for (std::size_t j : support) {
    s.v[j] = (j == y ? 1.0 : 0.0) - (row[j] + s.mu) / s.lambda;
    if (j != y && !(s.v[j] > 0.0)) s.support_positive = false;
  }
  s.y_positive = s.v[y] > 0.0;
  s.duals_nonnegative = true;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (std::find(support.begin(), support.end(), j) == support.end() && row[j] + s.mu < 0.0) {
      s.duals_nonnegative = false;
    }
  }
  return s;
}

}  // namespace

ClassLossRow::ClassLossRow(std::vector<double> values) : values_(std::move(values)) {
  require(values_.size() >= 2, ErrorKind::kInvalidArgument, "class loss row needs K >= 2");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    require(std::isfinite(values_[j]) && values_[j] > 0.0, ErrorKind::kInvalidArgument,
            "class loss " + std::to_string(j) + " must be finite and positive, got " +
                shortest(values_[j]));
  }
}

ReferenceDistribution::ReferenceDistribution(std::vector<double> values)
    : values_(std::move(values)) {
  SimplexWeights check(values_);  // validates the simplex constraints
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (values_[j] == 1.0) annotated_ = j;
  }
}

ReferenceDistribution ReferenceDistribution::one_hot(std::size_t k, std::size_t y) {
  require(y < k, ErrorKind::kInvalidArgument, "one-hot index out of range");
  std::vector<double> v(k, 0.0);
  v[y] = 1.0;
  return ReferenceDistribution(std::move(v));
}

ClassDivergence parse_class_divergence(const std::string& name) {
  if (name == "tv") return ClassDivergence::kTV;
  if (name == "l2") return ClassDivergence::kL2;
  if (name == "linf") return ClassDivergence::kLinf;
  if (name == "reverse_kl" || name == "revkl") return ClassDivergence::kReverseKL;
  fail(ErrorKind::kInvalidArgument,
       "unknown class divergence '" + name + "' (expected tv, l2, linf, reverse_kl)");
}

std::string to_string(ClassDivergence kind) {
  switch (kind) {
    case ClassDivergence::kTV: return "tv";
    case ClassDivergence::kL2: return "l2";
    case ClassDivergence::kLinf: return "linf";
    case ClassDivergence::kReverseKL: return "reverse_kl";
  }
  return "?";
}

double class_divergence(ClassDivergence kind, std::span<const double> e,
                        std::span<const double> v) {
  require(e.size() == v.size(), ErrorKind::kShapeMismatch, "class divergence length mismatch");
  double d = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double diff = e[j] - v[j];
    switch (kind) {
      case ClassDivergence::kTV: d += std::abs(diff); break;
      case ClassDivergence::kL2: d += diff * diff; break;
      case ClassDivergence::kLinf: d = std::max(d, std::abs(diff)); break;
      case ClassDivergence::kReverseKL:
        if (e[j] > 0.0) {
          if (v[j] <= 0.0) return std::numeric_limits<double>::infinity();
          d += e[j] * std::log(e[j] / v[j]);
        }
        break;
    }
  }
  return d;
}

ClassWeightRow tv_class_weights(const ClassLossRow& row, std::size_t y, double gamma) {
  check_index(row, y);
  check_gamma(gamma, 2.0, "tv");
  return two_point(row, y, gamma / 2.0);
}

ClassWeightRow linf_class_weights(const ClassLossRow& row, std::size_t y, double gamma) {
  check_index(row, y);
  check_gamma(gamma, 1.0, "linf");
  return two_point(row, y, gamma);
}

ClassWeightRow revkl_class_weights(const ClassLossRow& row, std::size_t y, double gamma) {
  check_index(row, y);
  check_gamma(gamma, std::numeric_limits<double>::max(), "reverse_kl");
  // -log v_y <= gamma binds at v_y = exp(-gamma).
  return two_point(row, y, -std::expm1(-gamma));
}

ClassWeightsWithReport l2_class_weights_exact(const ClassLossRow& row, std::size_t y,
                                              double gamma) {
  check_index(row, y);
  require(std::isfinite(gamma) && gamma > 0.0, ErrorKind::kInvalidArgument,
          "l2 class weights need gamma > 0, got " + shortest(gamma));
  const std::size_t k = row.size();
  ClassWeightsWithReport out{one_hot_row(k, y), {}};
  out.report.nu.assign(k, 0.0);
  if (row[y] <= row[argmin(row.values())]) {
    for (std::size_t j = 0; j < k; ++j) {
      if (j != y) {
        out.report.clamped.push_back(j);
        out.report.nu[j] = row[j] - row[y];
      }
    }
    out.report.mu = -row[y];
    return out;
  }

  // Ascending loss order, y ahead of any class with an equal loss.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] < row[b];
    return a == y && b != y;
  });

  bool blocked_by_radius = false;
  for (std::size_t m = 1; m <= k; ++m) {
    std::vector<std::size_t> support(order.begin(), order.begin() + m);
    if (std::find(support.begin(), support.end(), y) == support.end()) support.push_back(y);
    if (support.size() < 2) continue;
    const SupportSolution s = solve_on_support(row, y, support, gamma);
    if (!s.support_positive || !s.duals_nonnegative) continue;
    if (!s.y_positive) {
      blocked_by_radius = true;
      continue;
    }
    out.row.values = s.v;
    out.row.active_constraint = true;
    KKTReport& r = out.report;
    r.lambda = s.lambda;
    r.mu = s.mu;
    double residual = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool on = std::find(support.begin(), support.end(), j) != support.end();
      if (!on) {
        r.clamped.push_back(j);
        r.nu[j] = row[j] + s.mu;
      } else {
        const double e = j == y ? 1.0 : 0.0;
        residual = std::max(residual, std::abs(row[j] + s.mu + s.lambda * (s.v[j] - e)));
      }
    }
    r.stationarity_residual = residual;
    r.implied_delta = class_divergence(ClassDivergence::kL2,
                                       ReferenceDistribution::one_hot(k, y).values(), s.v);
    double total = 0.0;
    for (double x : s.v) total += x;
    r.simplex_residual = std::abs(total - 1.0);
    r.iterations = static_cast<int>(m);
    return out;
  }
  if (blocked_by_radius) {
    fail(ErrorKind::kRadiusTooLarge,
         "gamma=" + shortest(gamma) + " is large enough to drive the annotated class weight to zero");
  }
  fail(ErrorKind::kInternalConsistency,
       "no l2 support candidate satisfied the KKT conditions (gamma=" + shortest(gamma) + ")");
}

ClassWeightRow l2_class_weights_heuristic(const ClassLossRow& row, std::size_t y, double gamma) {
  const ClassWeightsWithReport exact = l2_class_weights_exact(row, y, gamma);
  const std::size_t k = row.size();
  if (!exact.row.active_constraint) {
    ClassWeightRow r = exact.row;
    r.matches_exact = true;
    return r;
  }
  double pivot = 0.0;
  int count = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (row[j] <= row[y]) {
      pivot += row[j];
      ++count;
    }
  }
  pivot /= count;
  std::vector<std::size_t> support{y};
  for (std::size_t j = 0; j < k; ++j) {
    if (j != y && row[j] < pivot) support.push_back(j);
  }

  // The guessed support can hold a class whose weight comes out
  // nonpositive; drop such classes and re-solve so the output stays feasible.
  SupportSolution s = solve_on_support(row, y, support, gamma);
  while (!s.support_positive && support.size() > 2) {
    std::vector<std::size_t> kept{y};
    for (std::size_t j : support) {
      if (j != y && s.v[j] > 0.0) kept.push_back(j);
    }
    if (kept.size() < 2) {
      // Fall back to the single lowest-loss class paired with y.
      kept = {y, argmin(row.values())};
    }
    if (kept.size() == support.size()) break;
    support = kept;
    s = solve_on_support(row, y, support, gamma);
  }
  if (!s.support_positive || !s.y_positive) {
    fail(ErrorKind::kRadiusTooLarge,
         "l2 heuristic support cannot keep the annotated class weight positive at gamma=" +
             shortest(gamma));
  }
  ClassWeightRow r;
  r.values = s.v;
  r.active_constraint = true;
  double diff = 0.0;
  for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(r.values[j] - exact.row.values[j]));
  r.matches_exact = diff < 1e-9;
  return r;
}

std::vector<double> project_to_simplex(std::span<const double> z) {
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = std::max(0.0, z[j] - tau);
  return x;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

// argmin ||x - z|| over the simplex intersected with ||x - r||^2 <= gamma:
// x(kappa) = P((z + kappa r)/(1 + kappa)) for the smallest feasible kappa.
std::vector<double> project_to_ball_simplex(std::span<const double> z,
                                            std::span<const double> r, double gamma) {
  const std::size_t k = z.size();
  auto at = [&](double kappa) {
    std::vector<double> shifted(k);
    for (std::size_t j = 0; j < k; ++j) shifted[j] = (z[j] + kappa * r[j]) / (1.0 + kappa);
    return project_to_simplex(shifted);
  };
  std::vector<double> x = at(0.0);
  if (squared_distance(x, r) <= gamma) return x;
  double lo = 0.0, hi = 1.0;
  std::vector<double> feasible = at(hi);
  while (squared_distance(feasible, r) > gamma && hi < 1e300) {
    lo = hi;
    hi *= 2.0;
    feasible = at(hi);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    std::vector<double> trial = at(mid);
    if (squared_distance(trial, r) <= gamma) {
      hi = mid;
      feasible = std::move(trial);
    } else {
      lo = mid;
    }
  }
  return feasible;
}

}  // namespace

ClassWeightRow general_class_weights_qp(const ClassLossRow& row,
                                        const ReferenceDistribution& reference, double gamma,
                                        const QPOptions& options) {
  const std::size_t k = row.size();
  require(reference.size() == k, ErrorKind::kShapeMismatch,
          "reference and class losses differ in length");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorKind::kInvalidArgument,
          "qp class weights need gamma >= 0, got " + shortest(gamma));
  const std::span<const double> losses = row.values();
  const std::span<const double> r = reference.values();
  ClassWeightRow out;
  out.values.assign(r.begin(), r.end());
  if (gamma == 0.0) return out;
  if (gamma >= 2.0) {
    out = one_hot_row(k, argmin(losses));
    out.active_constraint = false;
    return out;
  }
  const double hi = *std::max_element(losses.begin(), losses.end());
  const double lo = *std::min_element(losses.begin(), losses.end());
  if (hi == lo) return out;

  auto objective = [&](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += v[j] * losses[j];
    return s;
  };
  std::vector<double> v = out.values;
  double step = 1.0 / (hi - lo);
  double movement = 0.0;
  std::vector<double> z(k);
  for (int it = 0; it < options.max_iterations; ++it) {
    for (std::size_t j = 0; j < k; ++j) z[j] = v[j] - step * losses[j];
    std::vector<double> next = project_to_ball_simplex(z, r, gamma);
    // Backtrack if rounding in the projection makes the step uphill.
    while (objective(next) > objective(v) + 1e-15 && step > 1e-12) {
      step *= 0.5;
      for (std::size_t j = 0; j < k; ++j) z[j] = v[j] - step * losses[j];
      next = project_to_ball_simplex(z, r, gamma);
    }
    movement = std::sqrt(squared_distance(next, v));
    v = std::move(next);
    // The objective is linear, so any step descends; growing it lets the
    // projection of r - step L land on the optimum in a few iterations.
    step = std::min(step * 2.0, 1e200);
    if (movement < options.movement_tolerance) {
      out.values = v;
      out.active_constraint = squared_distance(v, r) > gamma - 1e-9;
      return out;
    }
  }
  fail(ErrorKind::kSolverFailure, "qp class weights did not converge in " +
                                      std::to_string(options.max_iterations) +
                                      " iterations; last movement " + shortest(movement));
}

ClassWeightRow class_weights(ClassDivergence kind, const ClassLossRow& row, std::size_t y,
                             double gamma) {
  switch (kind) {
    case ClassDivergence::kTV: return tv_class_weights(row, y, gamma);
    case ClassDivergence::kLinf: return linf_class_weights(row, y, gamma);
    case ClassDivergence::kReverseKL: return revkl_class_weights(row, y, gamma);
    case ClassDivergence::kL2:
      if (gamma == 0.0) return one_hot_row(row.size(), y);
      return l2_class_weights_exact(row, y, gamma).row;
  }
  fail(ErrorKind::kInvalidArgument, "unknown class divergence");
}

double class_reweighted_loss(const ClassLossRow& row, const ClassWeightRow& v) {
  require(row.size() == v.values.size(), ErrorKind::kShapeMismatch,
          "class weights and losses differ in length");
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += v.values[j] * row[j];
  return s;
}

}  // namespace cicw
