#pragma once

// Per-example class reweighting: for a row of class losses L_j and a
// reference distribution e (one-hot at the annotated label y, or two-hot
// after mixing),
//
//   min_v  sum_j v_j L_j   s.t.  v on the simplex,  D2(e, v) <= gamma.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cicw/instance_weights.hpp"

namespace cicw {

/// Losses L_j(x) against every class j; K >= 2 positive finite entries.
class ClassLossRow {
 public:
  explicit ClassLossRow(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

 private:
  std::vector<double> values_;
};

class ReferenceDistribution {
 public:
  explicit ReferenceDistribution(std::vector<double> values);
  static ReferenceDistribution one_hot(std::size_t k, std::size_t y);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::optional<std::size_t> annotated_index() const noexcept { return annotated_; }

 private:
  std::vector<double> values_;
  std::optional<std::size_t> annotated_;
};

struct ClassWeightRow {
  std::vector<double> values;
  bool active_constraint = false;
  // Set by the l2 heuristic only: whether it agreed with the exact solver.
  std::optional<bool> matches_exact;
};

struct ClassWeightsWithReport {
  ClassWeightRow row;
  KKTReport report;
};

enum class ClassDivergence { kTV, kL2, kLinf, kReverseKL };

ClassDivergence parse_class_divergence(const std::string& name);
std::string to_string(ClassDivergence kind);

/// D2(reference, v): sum |e - v|, squared l2, max |e - v|, or sum e log(e/v).
double class_divergence(ClassDivergence kind, std::span<const double> reference,
                        std::span<const double> v);

ClassWeightRow tv_class_weights(const ClassLossRow& row, std::size_t y, double gamma);
ClassWeightRow linf_class_weights(const ClassLossRow& row, std::size_t y, double gamma);
ClassWeightRow revkl_class_weights(const ClassLossRow& row, std::size_t y, double gamma);

ClassWeightsWithReport l2_class_weights_exact(const ClassLossRow& row, std::size_t y,
                                              double gamma);
ClassWeightRow l2_class_weights_heuristic(const ClassLossRow& row, std::size_t y, double gamma);

struct QPOptions {
  int max_iterations = 100000;
  double movement_tolerance = 1e-10;
};

/// Squared-l2 class weights against an arbitrary reference, by projected
/// gradient with an exact projection onto simplex-intersect-ball.
ClassWeightRow general_class_weights_qp(const ClassLossRow& row,
                                        const ReferenceDistribution& reference, double gamma,
                                        const QPOptions& options = {});

/// Dispatches the one-hot solvers; kL2 uses the exact solver.
ClassWeightRow class_weights(ClassDivergence kind, const ClassLossRow& row, std::size_t y,
                             double gamma);

double class_reweighted_loss(const ClassLossRow& row, const ClassWeightRow& v);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> z);

}  // namespace cicw
