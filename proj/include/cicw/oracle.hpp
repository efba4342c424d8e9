#pragma once

// Brute-force solvers of the radius-constrained weight problem
//
//   min_w  sum_i w_i L_i   s.t.  w on the simplex,  D(w, p) <= delta
//
// used to check the closed forms. They share no code with the multiplier
// solvers beyond the divergence definitions themselves.

#include <span>
#include <vector>

#include "cicw/instance_weights.hpp"

namespace cicw {

enum class OracleMode {
  kAuto,     // grid for n <= 3, barrier otherwise
  kGrid,     // zooming grid over the simplex, n in {2, 3}
  kBarrier,  // log-barrier interior-point Newton, any n
};

struct OracleOptions {
  OracleMode mode = OracleMode::kAuto;
  int max_newton_steps = 200;
  double duality_gap = 1e-10;
};

SimplexWeights oracle_weights(const LossVector& losses, const DivergenceSpec& spec, double delta,
                              const OracleOptions& options = {});

/// Same problem against an arbitrary reference distribution p with p_i > 0.
std::vector<double> oracle_weights(std::span<const double> losses,
                                   std::span<const double> reference,
                                   const DivergenceSpec& spec, double delta,
                                   const OracleOptions& options = {});

}  // namespace cicw
