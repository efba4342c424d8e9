#pragma once

// Batch kernels with an OpenMP path and a serial reference. Both paths run
// the same per-item (or per-chunk) computation, so their results are
// bitwise identical; the serial path is kept for tests and benchmarks.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cicw/class_weights.hpp"
#include "cicw/datagen.hpp"
#include "cicw/instance_weights.hpp"
#include "cicw/tinynn.hpp"

namespace cicw {

enum class Execution { kSerial, kParallel };

/// Rows of one-hot-reference class weights for every example (n x K).
Eigen::MatrixXd batch_class_weights(ClassDivergence kind, const Eigen::MatrixXd& class_losses,
                                    std::span<const std::size_t> labels, double gamma,
                                    Execution exec = Execution::kParallel);

std::vector<std::size_t> predict_dataset(const MLPParams& params, const Eigen::MatrixXd& features,
                                         Execution exec = Execution::kParallel);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

/// Weight of the first example in the two-example batch [L, partner] for
/// every (spec, L) pair; rows follow `specs`. Degenerate cells are NaN.
Eigen::MatrixXd levelset_grid(const std::vector<DivergenceSpec>& specs,
                              std::span<const double> losses, double partner,
                              Execution exec = Execution::kParallel);

struct GridBox {
  double x_min = -2.0, x_max = 3.0, y_min = -1.5, y_max = 2.0;
};

/// Probability of the last class on a resolution x resolution grid over
/// `box` (row = y index, column = x index). Points pass through `transform`
/// when given.
Eigen::MatrixXd decision_grid(const MLPParams& params, const GridBox& box, std::size_t resolution,
                              const Standardizer* transform,
                              Execution exec = Execution::kParallel);

}  // namespace cicw
