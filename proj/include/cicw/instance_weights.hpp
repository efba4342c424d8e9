#pragma once

// Divergence-constrained instance reweighting over one minibatch:
//
//   min_w  sum_i w_i L_i   s.t.  w >= 0,  sum_i w_i = 1,  D(w, u) <= delta
//
// with u the uniform distribution. Solvers are parameterized by the Lagrange
// multiplier (lambda or mu) instead of the radius delta; `implied_radius`
// recovers the delta a given multiplier selects.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cicw {

/// Per-example positive, finite losses for one minibatch.
class LossVector {
 public:
  explicit LossVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const;
  double max() const;

 private:
  std::vector<double> values_;
};

/// Nonnegative weights summing to one (within 1e-9).
class SimplexWeights {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SimplexWeights(std::vector<double> values);
  static SimplexWeights uniform(std::size_t n);
  static SimplexWeights one_hot(std::size_t n, std::size_t index);

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Convex generator f of an f-divergence D(w,u) = sum_i u_i f(w_i / u_i).
///
/// `f_prime_inverse` must be nondecreasing. It returns +inf for arguments at
/// or above the supremum of the range of f', and its value is ignored (the
/// weight is clamped to zero, nu_i > 0) for arguments at or below
/// `f_prime_at_zero`.
struct FDivergenceGenerator {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_prime_inverse;
  double f_prime_at_zero = -std::numeric_limits<double>::infinity();
};

FDivergenceGenerator kl_generator();          // f(t) = t log t
FDivergenceGenerator reverse_kl_generator();  // f(t) = -log t
// f(t) = (t - t^alpha) / (alpha (1 - alpha)), alpha not in {0, 1}.
FDivergenceGenerator alpha_generator(double alpha);

/// Strictly convex potential F of the Bregman divergence
/// D(w,u) = sum_i F(w_i) - F(u_i) - F'(u_i)(w_i - u_i).
struct BregmanGenerator {
  std::string name;
  std::function<double(double)> potential;
  std::function<double(double)> link;             // F'
  std::function<double(double)> link_inverse;     // (F')^{-1}
  std::function<double(double)> link_derivative;  // F''
  double link_at_zero = -std::numeric_limits<double>::infinity();
};

BregmanGenerator log_link_bregman();           // F(t) = t log t - t, KL
BregmanGenerator squared_euclidean_bregman();  // F(t) = t^2 / 2

enum class DivergenceFamily { kKL, kReverseKL, kAlpha, kGenericF, kBregman };

struct DivergenceSpec {
  DivergenceFamily family = DivergenceFamily::kKL;
  double alpha = 1.0;
  // lambda for KL / GenericF / Bregman, mu for ReverseKL / Alpha.
  double temperature = 1.0;
  std::optional<FDivergenceGenerator> generator;
  std::optional<BregmanGenerator> bregman;

  static DivergenceSpec kl(double lambda);
  static DivergenceSpec reverse_kl(double mu);
  // alpha == 1 resolves to KL and alpha == 0 to reverse-KL.
  static DivergenceSpec alpha_family(double alpha, double mu);
  static DivergenceSpec generic(FDivergenceGenerator generator, double lambda);
  static DivergenceSpec bregman_family(BregmanGenerator generator, double lambda);

  void validate() const;
  std::string describe() const;
};

/// Lagrange multipliers of the weight problem at a returned solution.
struct KKTReport {
  double lambda = 0.0;
  double mu = 0.0;
  std::vector<double> nu;
  double implied_delta = 0.0;
  std::vector<std::size_t> clamped;
  double stationarity_residual = 0.0;
  double simplex_residual = 0.0;
  int iterations = 0;

  /// Flat `key=value` pairs separated by commas, for CSV diagnostics.
  std::string to_record() const;
};

struct WeightsWithReport {
  SimplexWeights weights;
  KKTReport report;
};

struct RootSearchOptions {
  int max_expansions = 60;
  int max_bisections = 2000;
  double tolerance = 1e-12;
};

double weighted_loss(const LossVector& losses, const SimplexWeights& weights);

SimplexWeights kl_weights(const LossVector& losses, double lambda);
SimplexWeights reverse_kl_weights(const LossVector& losses, double mu);
SimplexWeights alpha_weights(const LossVector& losses, double alpha, double mu);

WeightsWithReport generic_fdiv_weights(const FDivergenceGenerator& generator,
                                       const LossVector& losses, double lambda,
                                       const RootSearchOptions& options = {});

WeightsWithReport bregman_weights(const BregmanGenerator& generator,
                                  const LossVector& losses, double lambda,
                                  const RootSearchOptions& options = {});

/// Dispatches on the spec's family.
SimplexWeights instance_weights(const LossVector& losses, const DivergenceSpec& spec);

/// Multipliers (lambda, mu, nu) implied by weights produced under `spec`.
KKTReport kkt_report(const LossVector& losses, const SimplexWeights& weights,
                     const DivergenceSpec& spec);

/// D(w, u) for the spec's divergence. Returns +inf (not an error) when the
/// divergence is unbounded, e.g. reverse-KL with a zero weight.
double implied_radius(const SimplexWeights& weights, const DivergenceSpec& spec);

/// Divergence from a general reference distribution, D(w, p).
double divergence_from(std::span<const double> weights, std::span<const double> reference,
                       const DivergenceSpec& spec);

/// Solves the radius-parameterized problem by bisecting on the multiplier of
/// the closed form until D(w,u) = delta. Supports KL, reverse-KL and alpha.
SimplexWeights radius_constrained_weights(const LossVector& losses,
                                          const DivergenceSpec& spec, double delta);

}  // namespace cicw
