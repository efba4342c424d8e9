#pragma once

// Synthetic datasets and label-noise processes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cicw {

struct NoisyDataset {
  Eigen::MatrixXd features;  // n x d
  std::vector<std::size_t> clean_labels;
  std::vector<std::size_t> noisy_labels;
  std::vector<bool> corrupted;
  std::size_t num_classes = 2;

  std::size_t size() const { return clean_labels.size(); }
  void validate() const;
};

enum class NoiseKind { kSymmetric, kAsymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double rate = 0.0;
  std::map<std::size_t, std::size_t> mapping;  // asymmetric only
};

struct LabelFlips {
  std::vector<std::size_t> labels;
  std::vector<bool> mask;
};

/// Upper moon (cos t, sin t) and lower moon (1 - cos t, 0.5 - sin t) with t
/// evenly spaced on [0, pi], plus Gaussian jitter. n must be even.
NoisyDataset two_moons(std::size_t n, double noise_std, std::uint64_t seed);

/// K clusters centred on the regular simplex (sep / sqrt 2)(e_j - 1/K) in
/// R^K, so every pair of centres is `separation` apart. Labels cycle i % K.
NoisyDataset gaussian_blobs(std::size_t k, std::size_t n, double separation, double noise_std,
                            std::uint64_t seed);

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // population standard deviation

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& features);

struct StandardizedDataset {
  NoisyDataset dataset;
  Standardizer transform;
};

StandardizedDataset standardize(const NoisyDataset& dataset);

/// Each label flips with probability eta to one of the K - 1 other classes.
LabelFlips flip_symmetric(const std::vector<std::size_t>& labels, double eta, std::size_t k,
                          std::uint64_t seed);

/// Labels of mapped classes become mapping[c] with probability eta.
LabelFlips flip_asymmetric(const std::vector<std::size_t>& labels, double eta,
                           const std::map<std::size_t, std::size_t>& mapping,
                           std::uint64_t seed);

/// Fills noisy_labels and corrupted from clean_labels.
void apply_noise(NoisyDataset& dataset, const NoiseSpec& spec, std::uint64_t seed);

/// Header x0..x{d-1},clean_label,noisy_label,corrupted.
void write_csv(std::ostream& out, const NoisyDataset& dataset);

}  // namespace cicw
