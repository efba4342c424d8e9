#include "cicw/datagen.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"
#include "cicw/rng.hpp"

namespace cicw {

void NoisyDataset::validate() const {
  const std::size_t n = clean_labels.size();
  require(static_cast<std::size_t>(features.rows()) == n && noisy_labels.size() == n &&
              corrupted.size() == n,
          ErrorKind::kShapeMismatch, "dataset columns differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    require(clean_labels[i] < num_classes && noisy_labels[i] < num_classes,
            ErrorKind::kInvalidArgument, "label out of range at row " + std::to_string(i));
    require(corrupted[i] == (clean_labels[i] != noisy_labels[i]),
            ErrorKind::kInternalConsistency, "corruption mask disagrees at row " + std::to_string(i));
  }
}

namespace {

NoisyDataset clean_dataset(Eigen::MatrixXd features, std::vector<std::size_t> labels,
                           std::size_t k) {
  NoisyDataset d;
  d.features = std::move(features);
  d.noisy_labels = labels;
  d.clean_labels = std::move(labels);
  d.corrupted.assign(d.clean_labels.size(), false);
  d.num_classes = k;
  return d;
}

}  // namespace

NoisyDataset two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  require(n >= 2 && n % 2 == 0, ErrorKind::kInvalidArgument, "two moons needs an even n >= 2");
  require(std::isfinite(noise_std) && noise_std >= 0.0, ErrorKind::kInvalidArgument,
          "noise std must be nonnegative");
  const std::size_t half = n / 2;
  const double pi = std::acos(-1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  std::vector<std::size_t> labels(n);
  for (std::size_t k = 0; k < half; ++k) {
    const double t = half == 1 ? 0.0 : pi * static_cast<double>(k) / static_cast<double>(half - 1);
    const auto upper = static_cast<Eigen::Index>(k);
    const auto lower = static_cast<Eigen::Index>(half + k);
    x(upper, 0) = std::cos(t);
    x(upper, 1) = std::sin(t);
    x(lower, 0) = 1.0 - std::cos(t);
    x(lower, 1) = 0.5 - std::sin(t);
    labels[k] = 0;
    labels[half + k] = 1;
  }
  if (noise_std > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> jitter(0.0, noise_std);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      x(i, 0) += jitter(rng);
      x(i, 1) += jitter(rng);
    }
  }
  return clean_dataset(std::move(x), std::move(labels), 2);
}

NoisyDataset gaussian_blobs(std::size_t k, std::size_t n, double separation, double noise_std,
                            std::uint64_t seed) {
  require(k >= 2, ErrorKind::kInvalidArgument, "blobs need K >= 2");
  require(n >= 1, ErrorKind::kInvalidArgument, "blobs need n >= 1");
  require(std::isfinite(separation) && separation > 0.0, ErrorKind::kInvalidArgument,
          "blob separation must be positive");
  require(std::isfinite(noise_std) && noise_std >= 0.0, ErrorKind::kInvalidArgument,
          "noise std must be nonnegative");
  const auto dims = static_cast<Eigen::Index>(k);
  const double scale = separation / std::sqrt(2.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dims);
  std::vector<std::size_t> labels(n);
  Rng rng(seed);
  std::normal_distribution<double> jitter(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    labels[i] = c;
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < dims; ++j) {
      const double centre = scale * ((static_cast<std::size_t>(j) == c ? 1.0 : 0.0) - 1.0 / static_cast<double>(k));
      x(r, j) = centre + (noise_std > 0.0 ? jitter(rng) : 0.0);
    }
  }
  return clean_dataset(std::move(x), std::move(labels), k);
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  require(features.cols() == mean.size(), ErrorKind::kShapeMismatch,
          "standardizer was fitted on a different feature count");
  Eigen::MatrixXd out = features;
  out.rowwise() -= mean;
  out.array().rowwise() /= scale.array();
  return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& features) {
  require(features.rows() >= 1, ErrorKind::kInvalidArgument, "cannot standardize an empty set");
  Standardizer s;
  s.mean = features.colwise().mean();
  s.scale.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.mean(j)).square().mean();
    require(var > 0.0, ErrorKind::kInvalidArgument,
            "feature column " + std::to_string(j) + " has zero variance");
    s.scale(j) = std::sqrt(var);
  }
  return s;
}

StandardizedDataset standardize(const NoisyDataset& dataset) {
  StandardizedDataset out{dataset, fit_standardizer(dataset.features)};
  out.dataset.features = out.transform.apply(dataset.features);
  return out;
}

LabelFlips flip_symmetric(const std::vector<std::size_t>& labels, double eta, std::size_t k,
                          std::uint64_t seed) {
  require(eta >= 0.0 && eta <= 1.0, ErrorKind::kInvalidArgument, "noise rate must be in [0, 1]");
  require(k >= 2, ErrorKind::kInvalidArgument, "symmetric noise needs K >= 2");
  Rng rng(seed);
  std::bernoulli_distribution flip(eta);
  std::uniform_int_distribution<std::size_t> offset(1, k - 1);
  LabelFlips out{labels, std::vector<bool>(labels.size(), false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < k, ErrorKind::kInvalidArgument, "label out of range for K");
    if (flip(rng)) {
      out.labels[i] = (labels[i] + offset(rng)) % k;
      out.mask[i] = true;
    }
  }
  return out;
}

LabelFlips flip_asymmetric(const std::vector<std::size_t>& labels, double eta,
                           const std::map<std::size_t, std::size_t>& mapping,
                           std::uint64_t seed) {
  require(eta >= 0.0 && eta <= 1.0, ErrorKind::kInvalidArgument, "noise rate must be in [0, 1]");
  for (const auto& [from, to] : mapping) {
    require(from != to, ErrorKind::kInvalidMapping,
            "asymmetric mapping sends class " + std::to_string(from) + " to itself");
  }
  Rng rng(seed);
  std::bernoulli_distribution flip(eta);
  LabelFlips out{labels, std::vector<bool>(labels.size(), false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = mapping.find(labels[i]);
    if (it == mapping.end()) continue;
    if (flip(rng)) {
      out.labels[i] = it->second;
      out.mask[i] = true;
    }
  }
  return out;
}

void apply_noise(NoisyDataset& dataset, const NoiseSpec& spec, std::uint64_t seed) {
  LabelFlips flips = spec.kind == NoiseKind::kSymmetric
                         ? flip_symmetric(dataset.clean_labels, spec.rate, dataset.num_classes, seed)
                         : flip_asymmetric(dataset.clean_labels, spec.rate, spec.mapping, seed);
  for (std::size_t c : flips.labels) {
    require(c < dataset.num_classes, ErrorKind::kInvalidMapping,
            "noise mapping targets class " + std::to_string(c) + " outside K");
  }
  dataset.noisy_labels = std::move(flips.labels);
  dataset.corrupted = std::move(flips.mask);
  dataset.validate();
}

void write_csv(std::ostream& out, const NoisyDataset& dataset) {
  const Eigen::Index d = dataset.features.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "clean_label,noisy_label,corrupted\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out << shortest(dataset.features(static_cast<Eigen::Index>(i), j)) << ',';
    }
    out << dataset.clean_labels[i] << ',' << dataset.noisy_labels[i] << ','
        << (dataset.corrupted[i] ? 1 : 0) << '\n';
  }
}

}  // namespace cicw
