#include "cicw/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "cicw/errors.hpp"

namespace cicw {
namespace {

constexpr std::ptrdiff_t kRowChunk = 256;

// Runs body(i) for i in [0, count), in parallel when asked. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void for_each_index(std::ptrdiff_t count, Execution exec, Body&& body) {
  if (exec == Execution::kSerial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
#if defined(CICW_HAVE_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#if defined(CICW_HAVE_OPENMP)
#pragma omp critical(cicw_kernel_error)
#endif
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::ptrdiff_t chunk_count(Eigen::Index rows) { return (rows + kRowChunk - 1) / kRowChunk; }

}  // namespace

Eigen::MatrixXd batch_class_weights(ClassDivergence kind, const Eigen::MatrixXd& class_losses,
                                    std::span<const std::size_t> labels, double gamma,
                                    Execution exec) {
  require(labels.size() == static_cast<std::size_t>(class_losses.rows()),
          ErrorKind::kShapeMismatch, "labels and class losses differ in rows");
  Eigen::MatrixXd out(class_losses.rows(), class_losses.cols());
  for_each_index(class_losses.rows(), exec, [&](std::ptrdiff_t i) {
    const Eigen::RowVectorXd row = class_losses.row(i);
    const ClassWeightRow v = class_weights(
        kind, ClassLossRow(std::vector<double>(row.data(), row.data() + row.size())),
        labels[static_cast<std::size_t>(i)], gamma);
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = v.values[static_cast<std::size_t>(j)];
  });
  return out;
}

std::vector<std::size_t> predict_dataset(const MLPParams& params, const Eigen::MatrixXd& features,
                                         Execution exec) {
  std::vector<std::size_t> out(static_cast<std::size_t>(features.rows()));
  for_each_index(chunk_count(features.rows()), exec, [&](std::ptrdiff_t c) {
    const Eigen::Index begin = c * kRowChunk;
    const Eigen::Index rows = std::min<Eigen::Index>(kRowChunk, features.rows() - begin);
    const std::vector<std::size_t> local = predict(forward(params, features.middleRows(begin, rows)));
    std::copy(local.begin(), local.end(), out.begin() + begin);
  });
  return out;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  require(predicted.size() == labels.size(), ErrorKind::kShapeMismatch,
          "predictions and labels differ in length");
  if (labels.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Eigen::MatrixXd levelset_grid(const std::vector<DivergenceSpec>& specs,
                              std::span<const double> losses, double partner,
                              Execution exec) {
  const auto rows = static_cast<std::ptrdiff_t>(specs.size());
  const auto cols = static_cast<std::ptrdiff_t>(losses.size());
  Eigen::MatrixXd out(rows, cols);
  for_each_index(rows * cols, exec, [&](std::ptrdiff_t cell) {
    const std::ptrdiff_t r = cell / cols, c = cell % cols;
    double w = std::numeric_limits<double>::quiet_NaN();
    try {
      w = instance_weights(LossVector({losses[static_cast<std::size_t>(c)], partner}),
                           specs[static_cast<std::size_t>(r)])[0];
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateBatch && e.kind() != ErrorKind::kInfeasibleHyperparameter) throw;
    }
    out(r, c) = w;
  });
  return out;
}

Eigen::MatrixXd decision_grid(const MLPParams& params, const GridBox& box, std::size_t resolution,
                              const Standardizer* transform, Execution exec) {
  require(resolution >= 2, ErrorKind::kInvalidArgument, "grid resolution must be at least 2");
  const auto res = static_cast<Eigen::Index>(resolution);
  Eigen::MatrixXd points(res * res, 2);
  for (Eigen::Index yi = 0; yi < res; ++yi) {
    for (Eigen::Index xi = 0; xi < res; ++xi) {
      points(yi * res + xi, 0) = box.x_min + (box.x_max - box.x_min) * static_cast<double>(xi) / static_cast<double>(res - 1);
      points(yi * res + xi, 1) = box.y_min + (box.y_max - box.y_min) * static_cast<double>(yi) / static_cast<double>(res - 1);
    }
  }
  if (transform) points = transform->apply(points);
  Eigen::VectorXd prob(points.rows());
  for_each_index(chunk_count(points.rows()), exec, [&](std::ptrdiff_t c) {
    const Eigen::Index begin = c * kRowChunk;
    const Eigen::Index rows = std::min<Eigen::Index>(kRowChunk, points.rows() - begin);
    const ForwardCache cache = forward(params, points.middleRows(begin, rows));
    prob.segment(begin, rows) = cache.probabilities.col(cache.probabilities.cols() - 1);
  });
  Eigen::MatrixXd out(res, res);
  for (Eigen::Index yi = 0; yi < res; ++yi) {
    for (Eigen::Index xi = 0; xi < res; ++xi) out(yi, xi) = prob(yi * res + xi);
  }
  return out;
}

}  // namespace cicw
