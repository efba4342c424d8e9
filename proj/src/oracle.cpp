#include "cicw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cicw/errors.hpp"

namespace cicw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// D(w, p) = sum_i g_i(w_i). Every supported divergence is separable, which
// keeps the barrier Hessian diagonal-plus-rank-one.
class SeparableDivergence {
 public:
  SeparableDivergence(const DivergenceSpec& spec, std::span<const double> p)
      : spec_(spec), p_(p.begin(), p.end()) {}

  double value(std::span<const double> w) const {
    double d = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double term = g(i, w[i]);
      if (std::isinf(term) || std::isnan(term)) return kInf;
      d += term;
    }
    return d;
  }

  double g(std::size_t i, double w) const {
    const double p = p_[i];
    const double t = w / p;
    switch (spec_.family) {
      case DivergenceFamily::kKL:
        return w > 0.0 ? w * std::log(t) : 0.0;
      case DivergenceFamily::kReverseKL:
        return w > 0.0 ? -p * std::log(t) : kInf;
      case DivergenceFamily::kAlpha: {
        const double a = spec_.alpha;
        if (w == 0.0 && a < 0.0) return kInf;
        const double ta = w == 0.0 ? 0.0 : std::pow(t, a);
        return p * (t - ta) / (a * (1.0 - a));
      }
      case DivergenceFamily::kGenericF:
        return p * spec_.generator->f(t);
      case DivergenceFamily::kBregman: {
        const BregmanGenerator& b = *spec_.bregman;
        return b.potential(w) - b.potential(p) - b.link(p) * (w - p);
      }
    }
    return kInf;
  }

  double d1(std::size_t i, double w) const {
    const double p = p_[i];
    const double t = w / p;
    switch (spec_.family) {
      case DivergenceFamily::kKL: return std::log(t) + 1.0;
      case DivergenceFamily::kReverseKL: return -p / w;
      case DivergenceFamily::kAlpha: {
        const double a = spec_.alpha;
        return (1.0 - a * std::pow(t, a - 1.0)) / (a * (1.0 - a));
      }
      case DivergenceFamily::kGenericF: return spec_.generator->f_prime(t);
      case DivergenceFamily::kBregman: return spec_.bregman->link(w) - spec_.bregman->link(p);
    }
    return 0.0;
  }

  double d2(std::size_t i, double w) const {
    const double p = p_[i];
    const double t = w / p;
    switch (spec_.family) {
      case DivergenceFamily::kKL: return 1.0 / w;
      case DivergenceFamily::kReverseKL: return p / (w * w);
      case DivergenceFamily::kAlpha: return std::pow(t, spec_.alpha - 2.0) / p;
      case DivergenceFamily::kGenericF: {
        const double h = 1e-6 * std::max(t, 1e-6);
        const auto& fp = spec_.generator->f_prime;
        return (fp(t + h) - fp(t - h)) / (2.0 * h * p);
      }
      case DivergenceFamily::kBregman: return spec_.bregman->link_derivative(w);
    }
    return 0.0;
  }

 private:
  DivergenceSpec spec_;
  std::vector<double> p_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// n = 2: the feasible set is an interval of w_0 and the objective is linear,
// so a zooming scan converges onto the interval endpoint.
std::vector<double> grid_two(std::span<const double> losses, std::span<const double> p,
                             const SeparableDivergence& div, double delta) {
  std::vector<double> best(p.begin(), p.end());
  double best_obj = dot(losses, best);
  double lo = 0.0, hi = 1.0;
  const int points = 2001;
  for (int level = 0; level < 40 && hi - lo > 1e-17; ++level) {
    const double step = (hi - lo) / (points - 1);
    for (int k = 0; k < points; ++k) {
      const double a = std::clamp(lo + step * k, 0.0, 1.0);
      const std::vector<double> w{a, 1.0 - a};
      if (div.value(w) > delta) continue;
      const double obj = dot(losses, w);
      if (obj < best_obj) {
        best_obj = obj;
        best = w;
      }
    }
    lo = std::max(0.0, best[0] - 2.0 * step);
    hi = std::min(1.0, best[0] + 2.0 * step);
  }
  return best;
}

// n = 3: the feasible set is convex and contains p, so it is star-shaped
// around p. Scan directions in the plane sum(w) = 1, locate the boundary along
// each ray by bisection, and zoom in on the best direction.
std::vector<double> grid_three(std::span<const double> losses, std::span<const double> p,
                               const SeparableDivergence& div, double delta) {
  // Orthonormal basis of {x : sum(x) = 0}.
  const double e1[3] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
  const double e2[3] = {1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0)};
  auto point = [&](double theta, double r) {
    std::vector<double> w(3);
    for (int k = 0; k < 3; ++k) w[k] = p[k] + r * (std::cos(theta) * e1[k] + std::sin(theta) * e2[k]);
    return w;
  };
  auto feasible = [&](const std::vector<double>& w) {
    for (double v : w) {
      if (v < 0.0) return false;
    }
    return div.value(w) <= delta;
  };
  auto boundary = [&](double theta) {
    double lo = 0.0, hi = 2.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(point(theta, mid))) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return point(theta, lo);
  };

  const double two_pi = 2.0 * std::acos(-1.0);
  double best_theta = 0.0;
  double best_obj = std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = two_pi;
  int points = 720;
  for (int level = 0; level < 40; ++level) {
    const double step = (hi - lo) / points;
    if (step < 1e-16) break;
    for (int k = 0; k <= points; ++k) {
      const double theta = lo + step * k;
      const double obj = dot(losses, boundary(theta));
      if (obj < best_obj) {
        best_obj = obj;
        best_theta = theta;
      }
    }
    lo = best_theta - 2.0 * step;
    hi = best_theta + 2.0 * step;
    points = 40;
  }
  return boundary(best_theta);
}

std::vector<double> barrier(std::span<const double> losses, std::span<const double> p,
                            const SeparableDivergence& div, double delta,
                            const OracleOptions& options) {
  const std::size_t n = losses.size();
  std::vector<double> w(p.begin(), p.end());
  std::ostringstream trace;

  auto phi = [&](const std::vector<double>& x, double t) {
    for (double v : x) {
      if (!(v > 0.0)) return kInf;
    }
    const double slack = delta - div.value(x);
    if (!(slack > 0.0)) return kInf;
    double s = t * dot(losses, x) - std::log(slack);
    for (double v : x) s -= std::log(v);
    return s;
  };

  const double barrier_terms = static_cast<double>(n + 1);
  double t = 1.0;
  std::vector<double> rhs(n);
  std::vector<double> grad_d(n), h(n), trial(n);
  while (true) {
    bool converged = false;
    for (int step = 0; step < options.max_newton_steps; ++step) {
      const double slack = delta - div.value(w);
      // Hessian = diag(h) + c g g^T with c = 1/slack^2; solve the equality-
      // constrained Newton system with Sherman-Morrison instead of a dense LU.
      for (std::size_t i = 0; i < n; ++i) {
        grad_d[i] = div.d1(i, w[i]);
        rhs[i] = -(t * losses[i] + grad_d[i] / slack - 1.0 / w[i]);
        h[i] = div.d2(i, w[i]) / slack + 1.0 / (w[i] * w[i]);
      }
      const double c = 1.0 / (slack * slack);
      auto apply_inverse = [&](const std::vector<double>& x) {
        double gx = 0.0, gg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          gx += grad_d[i] * x[i] / h[i];
          gg += grad_d[i] * grad_d[i] / h[i];
        }
        const double scale = c * gx / (1.0 + c * gg);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] - scale * grad_d[i]) / h[i];
        return y;
      };
      std::vector<double> r(n), ones(n, 1.0);
      for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i];
      const std::vector<double> hr = apply_inverse(r);
      const std::vector<double> h1 = apply_inverse(ones);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += hr[i];
        den += h1[i];
      }
      const double nu = num / den;
      std::vector<double> sol(n);
      for (std::size_t i = 0; i < n; ++i) sol[i] = hr[i] - nu * h1[i];
      // Newton decrement squared, -grad . step.
      double decrement = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrement += sol[i] * rhs[i];
      if (!(decrement > 1e-18)) {
        converged = true;
        break;
      }
      const double base = phi(w, t);
      double s = 1.0;
      for (int ls = 0; ls < 200; ++ls, s *= 0.5) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = w[i] + s * sol[i];
          total += trial[i];
        }
        // Rounding in the KKT solve leaves a small drift off the simplex.
        for (double& v : trial) v /= total;
        if (phi(trial, t) <= base - 0.25 * s * decrement) break;
      }
      if (!(phi(trial, t) < base)) {
        converged = true;  // no further progress representable
        break;
      }
      w = trial;
    }
    trace << " t=" << t << ":";
    for (double v : w) trace << " " << v;
    if (!converged) {
      fail(ErrorKind::kSolverFailure, "barrier oracle did not converge; trace" + trace.str());
    }
    if (barrier_terms / t < options.duality_gap) break;
    t *= 10.0;
  }
  return w;
}

}  // namespace

std::vector<double> oracle_weights(std::span<const double> losses,
                                   std::span<const double> reference,
                                   const DivergenceSpec& spec, double delta,
                                   const OracleOptions& options) {
  require(losses.size() == reference.size() && !losses.empty(), ErrorKind::kShapeMismatch,
          "oracle needs matching nonempty losses and reference");
  require(std::isfinite(delta) && delta >= 0.0, ErrorKind::kInvalidArgument,
          "delta must be finite and nonnegative");
  for (double p : reference) {
    require(p > 0.0, ErrorKind::kInvalidArgument, "oracle reference entries must be positive");
  }
  const std::size_t n = losses.size();
  std::vector<double> p(reference.begin(), reference.end());
  if (n == 1 || delta == 0.0) return p;

  const SeparableDivergence div(spec, reference);
  const auto low = std::min_element(losses.begin(), losses.end());
  const std::size_t argmin = static_cast<std::size_t>(low - losses.begin());
  if (std::count(losses.begin(), losses.end(), *low) == 1) {
    std::vector<double> one_hot(n, 0.0);
    one_hot[argmin] = 1.0;
    if (div.value(one_hot) <= delta) return one_hot;
  }

  OracleMode mode = options.mode;
  if (mode == OracleMode::kAuto) mode = n <= 3 ? OracleMode::kGrid : OracleMode::kBarrier;
  if (mode == OracleMode::kGrid) {
    require(n <= 3, ErrorKind::kInvalidArgument, "grid oracle supports n <= 3");
    return n == 2 ? grid_two(losses, p, div, delta) : grid_three(losses, p, div, delta);
  }
  return barrier(losses, p, div, delta, options);
}

SimplexWeights oracle_weights(const LossVector& losses, const DivergenceSpec& spec, double delta,
                              const OracleOptions& options) {
  const std::vector<double> u(losses.size(), 1.0 / static_cast<double>(losses.size()));
  std::vector<double> w = oracle_weights(losses.values(), u, spec, delta, options);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return SimplexWeights(std::move(w));
}

}  // namespace cicw
