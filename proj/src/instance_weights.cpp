#include "cicw/instance_weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"

namespace cicw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_temperature(double value, const char* name) {
  require(std::isfinite(value) && value > 0.0, ErrorKind::kInvalidArgument,
          std::string(name) + " must be positive and finite, got " + shortest(value));
}

// Normalizes log-weights with a max shift. Entries equal to -inf map to zero.
std::vector<double> softmax_from_logs(const std::vector<double>& logs) {
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> w(logs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    w[i] = std::isinf(logs[i]) && logs[i] < 0 ? 0.0 : std::exp(logs[i] - top);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Shared machinery of the generic f-divergence and Bregman solvers: w_i(mu)
// is nonincreasing in mu, so the simplex residual sum_i w_i(mu) - 1 can be
// bisected once a sign change is bracketed.
struct MultiplierSearch {
  std::function<double(std::size_t, double)> weight_at;  // returns >= 0 or +inf
  std::size_t n = 0;

  double total(double mu) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight_at(i, mu);
      if (std::isnan(w) || w == kInf) return kInf;
      s += w;
    }
    return s;
  }
};

struct MultiplierResult {
  double mu = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

MultiplierResult find_multiplier(const MultiplierSearch& search, double lo, double hi,
                                 const RootSearchOptions& options) {
  std::ostringstream history;
  double width = hi - lo;
  double s_lo = search.total(lo);
  double s_hi = search.total(hi);
  int expansions = 0;
  history << "[" << shortest(lo) << "," << shortest(hi) << "]->(" << shortest(s_lo) << "," << shortest(s_hi) << ")";
  while (!(s_lo > 1.0 && s_hi < 1.0)) {
    if (s_lo == 1.0) return {lo, 0.0, 0};
    if (s_hi == 1.0) return {hi, 0.0, 0};
    if (expansions >= options.max_expansions) {
      fail(ErrorKind::kSolverFailure,
           "could not bracket the normalization multiplier after " +
               std::to_string(expansions) + " expansions; history " + history.str());
    }
    if (!(s_lo > 1.0)) lo -= width;
    if (!(s_hi < 1.0)) hi += width;
    width *= 2.0;
    ++expansions;
    s_lo = search.total(lo);
    s_hi = search.total(hi);
    history << " [" << shortest(lo) << "," << shortest(hi) << "]->(" << shortest(s_lo) << "," << shortest(s_hi)
            << ")";
  }

  MultiplierResult result{hi, std::abs(s_hi - 1.0), 0};
  for (int it = 0; it < options.max_bisections; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    result.iterations = it + 1;
    if (mid <= lo || mid >= hi) break;
    const double s = search.total(mid);
    if (std::isfinite(s) && std::abs(s - 1.0) < result.residual) result = {mid, std::abs(s - 1.0), it + 1};
    if (std::isfinite(s) && std::abs(s - 1.0) <= options.tolerance) break;
    if (s > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return result;
}

double stationarity_max(const std::vector<double>& residuals) {
  double worst = 0.0;
  for (double r : residuals) worst = std::max(worst, std::abs(r));
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain types

LossVector::LossVector(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::kInvalidArgument, "loss vector must be nonempty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]) && values_[i] > 0.0, ErrorKind::kInvalidArgument,
            "loss " + std::to_string(i) + " must be finite and positive, got " +
                shortest(values_[i]));
  }
}

double LossVector::min() const { return *std::min_element(values_.begin(), values_.end()); }
double LossVector::max() const { return *std::max_element(values_.begin(), values_.end()); }

SimplexWeights::SimplexWeights(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::kInvalidArgument, "weight vector must be nonempty");
  double total = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]) && values_[i] >= 0.0, ErrorKind::kInvalidArgument,
            "weight " + std::to_string(i) + " must be finite and nonnegative, got " +
                shortest(values_[i]));
    total += values_[i];
  }
  require(std::abs(total - 1.0) <= kSumTolerance, ErrorKind::kInvalidArgument,
          "weights must sum to 1, got " + shortest(total));
}

SimplexWeights SimplexWeights::uniform(std::size_t n) {
  require(n > 0, ErrorKind::kInvalidArgument, "uniform weights need n >= 1");
  return SimplexWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SimplexWeights SimplexWeights::one_hot(std::size_t n, std::size_t index) {
  require(index < n, ErrorKind::kInvalidArgument, "one-hot index out of range");
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return SimplexWeights(std::move(v));
}

// ---------------------------------------------------------------------------
// Generators

FDivergenceGenerator kl_generator() {
  FDivergenceGenerator g;
  g.name = "kl";
  g.f = [](double t) { return xlogx(t); };
  g.f_prime = [](double t) { return std::log(t) + 1.0; };
  g.f_prime_inverse = [](double s) { return std::exp(s - 1.0); };
  return g;
}

FDivergenceGenerator reverse_kl_generator() {
  FDivergenceGenerator g;
  g.name = "reverse_kl";
  g.f = [](double t) { return t > 0.0 ? -std::log(t) : kInf; };
  g.f_prime = [](double t) { return -1.0 / t; };
  g.f_prime_inverse = [](double s) { return s < 0.0 ? -1.0 / s : kInf; };
  return g;
}

FDivergenceGenerator alpha_generator(double alpha) {
  require(std::isfinite(alpha) && alpha != 0.0 && alpha != 1.0, ErrorKind::kInvalidArgument,
          "alpha generator needs finite alpha outside {0, 1}, got " + shortest(alpha));
  const double scale = 1.0 / (alpha * (1.0 - alpha));
  FDivergenceGenerator g;
  g.name = "alpha(" + shortest(alpha) + ")";
  g.f = [alpha, scale](double t) {
    if (t == 0.0) return alpha < 0.0 ? kInf : 0.0;
    return scale * (t - std::pow(t, alpha));
  };
  g.f_prime = [alpha, scale](double t) {
    return scale - std::pow(t, alpha - 1.0) / (1.0 - alpha);
  };
  // f'(t) = c - t^(alpha-1)/(1-alpha) with c = 1/(alpha(1-alpha)), so
  // t = ((1-alpha)(c - s))^(1/(alpha-1)).
  g.f_prime_inverse = [alpha, scale](double s) {
    const double base = (1.0 - alpha) * (scale - s);
    if (alpha < 1.0) return base > 0.0 ? std::pow(base, 1.0 / (alpha - 1.0)) : kInf;
    return base > 0.0 ? std::pow(base, 1.0 / (alpha - 1.0)) : 0.0;
  };
  if (alpha > 1.0) g.f_prime_at_zero = scale;
  return g;
}

BregmanGenerator log_link_bregman() {
  BregmanGenerator g;
  g.name = "log_link";
  g.potential = [](double t) { return xlogx(t) - t; };
  g.link = [](double t) { return std::log(t); };
  g.link_inverse = [](double s) { return std::exp(s); };
  g.link_derivative = [](double t) { return 1.0 / t; };
  return g;
}

BregmanGenerator squared_euclidean_bregman() {
  BregmanGenerator g;
  g.name = "squared_euclidean";
  g.potential = [](double t) { return 0.5 * t * t; };
  g.link = [](double t) { return t; };
  g.link_inverse = [](double s) { return s; };
  g.link_derivative = [](double) { return 1.0; };
  g.link_at_zero = 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// DivergenceSpec

DivergenceSpec DivergenceSpec::kl(double lambda) {
  DivergenceSpec s;
  s.family = DivergenceFamily::kKL;
  s.alpha = 1.0;
  s.temperature = lambda;
  return s;
}

DivergenceSpec DivergenceSpec::reverse_kl(double mu) {
  DivergenceSpec s;
  s.family = DivergenceFamily::kReverseKL;
  s.alpha = 0.0;
  s.temperature = mu;
  return s;
}

DivergenceSpec DivergenceSpec::alpha_family(double alpha, double mu) {
  if (alpha == 1.0) return kl(mu);
  if (alpha == 0.0) return reverse_kl(mu);
  DivergenceSpec s;
  s.family = DivergenceFamily::kAlpha;
  s.alpha = alpha;
  s.temperature = mu;
  return s;
}

DivergenceSpec DivergenceSpec::generic(FDivergenceGenerator generator, double lambda) {
  DivergenceSpec s;
  s.family = DivergenceFamily::kGenericF;
  s.temperature = lambda;
  s.generator = std::move(generator);
  return s;
}

DivergenceSpec DivergenceSpec::bregman_family(BregmanGenerator generator, double lambda) {
  DivergenceSpec s;
  s.family = DivergenceFamily::kBregman;
  s.temperature = lambda;
  s.bregman = std::move(generator);
  return s;
}

void DivergenceSpec::validate() const {
  // Reverse-KL admits any mu with L_i + mu > 0, checked against the losses.
  if (family != DivergenceFamily::kReverseKL) require_temperature(temperature, "temperature");
  if (family == DivergenceFamily::kAlpha) {
    require(std::isfinite(alpha), ErrorKind::kInvalidArgument, "alpha must be finite");
  }
  if (family == DivergenceFamily::kGenericF) {
    require(generator.has_value(), ErrorKind::kInvalidArgument,
            "generic f-divergence spec needs a generator");
  }
  if (family == DivergenceFamily::kBregman) {
    require(bregman.has_value(), ErrorKind::kInvalidArgument,
            "Bregman spec needs a generator");
  }
}

std::string DivergenceSpec::describe() const {
  switch (family) {
    case DivergenceFamily::kKL: return "kl(lambda=" + shortest(temperature) + ")";
    case DivergenceFamily::kReverseKL: return "reverse_kl(mu=" + shortest(temperature) + ")";
    case DivergenceFamily::kAlpha:
      return "alpha(alpha=" + shortest(alpha) + ",mu=" + shortest(temperature) + ")";
    case DivergenceFamily::kGenericF:
      return "f(" + (generator ? generator->name : std::string("?")) +
             ",lambda=" + shortest(temperature) + ")";
    case DivergenceFamily::kBregman:
      return "bregman(" + (bregman ? bregman->name : std::string("?")) +
             ",lambda=" + shortest(temperature) + ")";
  }
  return "?";
}

std::string KKTReport::to_record() const {
  std::ostringstream os;
  os.precision(17);
  os << "lambda=" << lambda << ",mu=" << mu << ",implied_delta=" << implied_delta
     << ",stationarity_residual=" << stationarity_residual
     << ",simplex_residual=" << simplex_residual << ",iterations=" << iterations
     << ",clamped=";
  for (std::size_t k = 0; k < clamped.size(); ++k) os << (k ? ";" : "") << clamped[k];
  os << ",nu=";
  for (std::size_t k = 0; k < nu.size(); ++k) os << (k ? ";" : "") << nu[k];
  return os.str();
}

// ---------------------------------------------------------------------------
// Closed forms

double weighted_loss(const LossVector& losses, const SimplexWeights& weights) {
  require(losses.size() == weights.size(), ErrorKind::kShapeMismatch,
          "losses and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) total += weights[i] * losses[i];
  return total;
}

SimplexWeights kl_weights(const LossVector& losses, double lambda) {
  require_temperature(lambda, "lambda");
  const std::size_t n = losses.size();
  if (n == 1) return SimplexWeights({1.0});
  const double lowest = losses.min();
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-(losses[i] - lowest) / lambda);
    total += w[i];
  }
  for (double& x : w) x /= total;
  for (double x : w) {
    if (!std::isfinite(x)) {
      fail(ErrorKind::kNumericRange, "KL weights not finite for lambda=" + shortest(lambda) +
                                         " and loss span " + shortest(losses.max() - lowest));
    }
  }
  return SimplexWeights(std::move(w));
}

SimplexWeights reverse_kl_weights(const LossVector& losses, double mu) {
  require(std::isfinite(mu), ErrorKind::kInvalidArgument, "mu must be finite");
  const std::size_t n = losses.size();
  const double lowest = losses.min();
  require(lowest + mu > 0.0, ErrorKind::kInfeasibleHyperparameter,
          "reverse-KL needs L_i + mu > 0 for all i; mu=" + shortest(mu) +
              " but the minimum admissible mu is > " + shortest(-lowest));
  if (n == 1) return SimplexWeights({1.0});
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 1.0 / (losses[i] + mu);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return SimplexWeights(std::move(w));
}

namespace {

// [(1-alpha) L_i + mu]_+^(1/(alpha-1)) normalized, in log space. Does not
// check that mu > 0 so the radius search may use the full admissible range.
std::vector<double> alpha_weights_unchecked(std::span<const double> losses, double alpha,
                                            double mu) {
  const double exponent = 1.0 / (alpha - 1.0);
  std::vector<double> logs(losses.size());
  bool any = false;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double base = (1.0 - alpha) * losses[i] + mu;
    if (alpha < 1.0) {
      require(base > 0.0, ErrorKind::kInternalConsistency,
              "alpha < 1 produced a nonpositive base (1-alpha)L+mu=" + shortest(base));
    }
    if (base > 0.0) {
      logs[i] = exponent * std::log(base);
      any = true;
    } else {
      logs[i] = -kInf;
    }
  }
  if (!any) {
    fail(ErrorKind::kDegenerateBatch,
         "every alpha weight clamped to zero (alpha=" + shortest(alpha) + ", mu=" + shortest(mu) +
             "); need mu > (alpha-1)*min(L)");
  }
  return softmax_from_logs(logs);
}

}  // namespace

SimplexWeights alpha_weights(const LossVector& losses, double alpha, double mu) {
  require(std::isfinite(alpha), ErrorKind::kInvalidArgument, "alpha must be finite");
  if (alpha == 1.0) return kl_weights(losses, mu);
  if (alpha == 0.0) return reverse_kl_weights(losses, mu);
  require_temperature(mu, "mu");
  if (losses.size() == 1) return SimplexWeights({1.0});
  return SimplexWeights(alpha_weights_unchecked(losses.values(), alpha, mu));
}

// ---------------------------------------------------------------------------
// Root-search solvers

WeightsWithReport generic_fdiv_weights(const FDivergenceGenerator& generator,
                                       const LossVector& losses, double lambda,
                                       const RootSearchOptions& options) {
  require_temperature(lambda, "lambda");
  require(static_cast<bool>(generator.f_prime_inverse), ErrorKind::kInvalidArgument,
          "generator lacks f'^{-1}");
  const std::size_t n = losses.size();
  const double u = 1.0 / static_cast<double>(n);
  const double threshold = generator.f_prime_at_zero;

  auto argument = [&](std::size_t i, double mu) { return (-losses[i] - mu) / lambda; };
  MultiplierSearch search;
  search.n = n;
  search.weight_at = [&](std::size_t i, double mu) {
    const double t = argument(i, mu);
    if (t <= threshold) return 0.0;
    return std::max(0.0, u * generator.f_prime_inverse(t));
  };

  WeightsWithReport out{SimplexWeights::uniform(n), {}};
  out.report.lambda = lambda;
  out.report.nu.assign(n, 0.0);
  if (n == 1) return out;

  const double top = losses.max();
  const MultiplierResult root =
      find_multiplier(search, -top - 10.0 * lambda, top + 10.0 * lambda, options);

  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = search.weight_at(i, root.mu);
    total += w[i];
  }
  for (double& x : w) x /= total;

  KKTReport& r = out.report;
  r.mu = root.mu;
  r.iterations = root.iterations;
  r.simplex_residual = root.residual;
  std::vector<double> residuals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) {
      r.clamped.push_back(i);
      r.nu[i] = lambda * (threshold - argument(i, root.mu));
    } else if (generator.f_prime) {
      residuals[i] = losses[i] + lambda * generator.f_prime(w[i] / u) + root.mu;
    }
  }
  r.stationarity_residual = stationarity_max(residuals);
  out.weights = SimplexWeights(std::move(w));
  if (generator.f) {
    double d = 0.0;
    for (double x : out.weights.values()) d += u * generator.f(x / u);
    r.implied_delta = std::max(0.0, d);
  }
  return out;
}

WeightsWithReport bregman_weights(const BregmanGenerator& generator, const LossVector& losses,
                                  double lambda, const RootSearchOptions& options) {
  require_temperature(lambda, "lambda");
  require(generator.link && generator.link_inverse, ErrorKind::kInvalidArgument,
          "Bregman generator lacks a link or its inverse");
  const std::size_t n = losses.size();
  const double u = 1.0 / static_cast<double>(n);
  const double link_u = generator.link(u);
  const double threshold = generator.link_at_zero;

  auto argument = [&](std::size_t i, double mu) { return link_u - (losses[i] + mu) / lambda; };
  MultiplierSearch search;
  search.n = n;
  search.weight_at = [&](std::size_t i, double mu) {
    const double s = argument(i, mu);
    if (s <= threshold) return 0.0;
    return std::max(0.0, generator.link_inverse(s));
  };

  WeightsWithReport out{SimplexWeights::uniform(n), {}};
  out.report.lambda = lambda;
  out.report.nu.assign(n, 0.0);
  if (n == 1) return out;

  const double top = losses.max();
  const MultiplierResult root =
      find_multiplier(search, -top - 10.0 * lambda, top + 10.0 * lambda, options);

  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = search.weight_at(i, root.mu);
    total += w[i];
  }
  for (double& x : w) x /= total;

  KKTReport& r = out.report;
  r.mu = root.mu;
  r.iterations = root.iterations;
  r.simplex_residual = root.residual;
  std::vector<double> residuals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) {
      r.clamped.push_back(i);
      r.nu[i] = lambda * (threshold - argument(i, root.mu));
    } else {
      residuals[i] = losses[i] + lambda * (generator.link(w[i]) - link_u) + root.mu;
    }
  }
  r.stationarity_residual = stationarity_max(residuals);
  out.weights = SimplexWeights(std::move(w));
  if (generator.potential) {
    double d = 0.0;
    for (double x : out.weights.values()) {
      d += generator.potential(x) - generator.potential(u) - link_u * (x - u);
    }
    r.implied_delta = std::max(0.0, d);
  }
  return out;
}

SimplexWeights instance_weights(const LossVector& losses, const DivergenceSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case DivergenceFamily::kKL: return kl_weights(losses, spec.temperature);
    case DivergenceFamily::kReverseKL: return reverse_kl_weights(losses, spec.temperature);
    case DivergenceFamily::kAlpha: return alpha_weights(losses, spec.alpha, spec.temperature);
    case DivergenceFamily::kGenericF:
      return generic_fdiv_weights(*spec.generator, losses, spec.temperature).weights;
    case DivergenceFamily::kBregman:
      return bregman_weights(*spec.bregman, losses, spec.temperature).weights;
  }
  fail(ErrorKind::kInvalidArgument, "unknown divergence family");
}

// ---------------------------------------------------------------------------
// Radii and multipliers

double divergence_from(std::span<const double> w, std::span<const double> p,
                       const DivergenceSpec& spec) {
  require(w.size() == p.size(), ErrorKind::kShapeMismatch,
          "weights and reference differ in length");
  double d = 0.0;
  switch (spec.family) {
    case DivergenceFamily::kKL:
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) d += w[i] * std::log(w[i] / p[i]);
      }
      break;
    case DivergenceFamily::kReverseKL:
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (w[i] <= 0.0) return kInf;
        d += p[i] * std::log(p[i] / w[i]);
      }
      break;
    case DivergenceFamily::kAlpha: {
      const FDivergenceGenerator g = alpha_generator(spec.alpha);
      for (std::size_t i = 0; i < w.size(); ++i) d += p[i] * g.f(w[i] / p[i]);
      break;
    }
    case DivergenceFamily::kGenericF:
      require(spec.generator.has_value(), ErrorKind::kInvalidArgument, "missing generator");
      for (std::size_t i = 0; i < w.size(); ++i) d += p[i] * spec.generator->f(w[i] / p[i]);
      break;
    case DivergenceFamily::kBregman: {
      require(spec.bregman.has_value(), ErrorKind::kInvalidArgument, "missing generator");
      const BregmanGenerator& g = *spec.bregman;
      for (std::size_t i = 0; i < w.size(); ++i) {
        d += g.potential(w[i]) - g.potential(p[i]) - g.link(p[i]) * (w[i] - p[i]);
      }
      break;
    }
  }
  if (std::isinf(d)) return kInf;
  return std::max(0.0, d);
}

double implied_radius(const SimplexWeights& weights, const DivergenceSpec& spec) {
  const std::size_t n = weights.size();
  const std::vector<double> u(n, 1.0 / static_cast<double>(n));
  return divergence_from(weights.values(), u, spec);
}

KKTReport kkt_report(const LossVector& losses, const SimplexWeights& weights,
                     const DivergenceSpec& spec) {
  require(losses.size() == weights.size(), ErrorKind::kShapeMismatch,
          "losses and weights differ in length");
  spec.validate();
  const std::size_t n = losses.size();
  const double u = 1.0 / static_cast<double>(n);
  KKTReport r;
  r.nu.assign(n, 0.0);
  r.implied_delta = implied_radius(weights, spec);
  double total = 0.0;
  for (double x : weights.values()) total += x;
  r.simplex_residual = std::abs(total - 1.0);
  std::vector<double> residuals(n, 0.0);

  FDivergenceGenerator g;
  switch (spec.family) {
    case DivergenceFamily::kKL: {
      // w_i = u exp(-(L_i + mu)/lambda - 1)
      g = kl_generator();
      r.lambda = spec.temperature;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += -r.lambda * (std::log(weights[i] / u) + 1.0) - losses[i];
      }
      r.mu = acc / static_cast<double>(n);
      break;
    }
    case DivergenceFamily::kReverseKL: {
      // w_i = u lambda / (L_i + mu)
      g = reverse_kl_generator();
      r.mu = spec.temperature;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += u / (losses[i] + r.mu);
      r.lambda = 1.0 / acc;
      break;
    }
    case DivergenceFamily::kAlpha: {
      // With the exact generator, w_i = u lambda^(-1/(alpha-1)) b_i^(1/(alpha-1)),
      // b_i = (1-alpha)L_i + mu_c, and mu_c = (1-alpha) mu + lambda/alpha.
      const double a = spec.alpha;
      g = alpha_generator(a);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double b = (1.0 - a) * losses[i] + spec.temperature;
        if (b > 0.0) acc += u * std::pow(b, 1.0 / (a - 1.0));
      }
      r.lambda = std::pow(acc, a - 1.0);
      r.mu = (spec.temperature - r.lambda / a) / (1.0 - a);
      break;
    }
    case DivergenceFamily::kGenericF:
    case DivergenceFamily::kBregman:
      fail(ErrorKind::kInvalidArgument,
           "root-search families report their multipliers directly");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) {
      r.clamped.push_back(i);
      r.nu[i] = losses[i] + r.mu + r.lambda * g.f_prime_at_zero;
    } else {
      residuals[i] = losses[i] + r.lambda * g.f_prime(weights[i] / u) + r.mu;
    }
  }
  r.stationarity_residual = stationarity_max(residuals);
  return r;
}

SimplexWeights radius_constrained_weights(const LossVector& losses, const DivergenceSpec& spec,
                                          double delta) {
  require(std::isfinite(delta) && delta >= 0.0, ErrorKind::kInvalidArgument,
          "delta must be finite and nonnegative");
  const std::size_t n = losses.size();
  if (n == 1 || delta == 0.0 || all_equal(losses.values())) return SimplexWeights::uniform(n);

  const double lowest = losses.min();
  // Multiplier as a function of s; the implied radius decreases in s.
  std::function<std::vector<double>(double)> solve;
  double lo = -40.0, hi = 40.0;
  switch (spec.family) {
    case DivergenceFamily::kKL:
      solve = [&](double s) { return kl_weights(losses, std::exp(s)).vector(); };
      break;
    case DivergenceFamily::kReverseKL:
      solve = [&](double s) {
        return reverse_kl_weights(losses, -lowest + std::exp(s) * (1.0 + lowest)).vector();
      };
      lo = -30.0;  // keeps the offset above the rounding of -lowest
      break;
    case DivergenceFamily::kAlpha: {
      const double a = spec.alpha;
      const double floor = a < 1.0 ? -(1.0 - a) * lowest : (a - 1.0) * lowest;
      solve = [&, a, floor](double s) {
        return alpha_weights_unchecked(losses.values(), a, floor + std::exp(s) * (1.0 + lowest));
      };
      lo = -30.0;
      break;
    }
    default:
      fail(ErrorKind::kInvalidArgument,
           "radius-constrained solve supports the KL, reverse-KL and alpha families");
  }
  const std::vector<double> u(n, 1.0 / static_cast<double>(n));
  auto radius = [&](const std::vector<double>& w) { return divergence_from(w, u, spec); };

  std::vector<double> w_lo = solve(lo);
  // Constraint inactive up to the multiplier range: w_lo is within rounding of
  // the concentrated limit.
  if (radius(w_lo) <= delta) return SimplexWeights(std::move(w_lo));
  std::vector<double> best = solve(hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    std::vector<double> w = solve(mid);
    if (radius(w) > delta) {
      lo = mid;
    } else {
      hi = mid;
      best = std::move(w);
    }
  }
  return SimplexWeights(std::move(best));
}

}  // namespace cicw
