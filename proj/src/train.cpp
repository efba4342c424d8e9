#include "cicw/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"
#include "cicw/kernels.hpp"
#include "cicw/mixup.hpp"
#include "cicw/rng.hpp"

namespace cicw {

TrainData make_train_data(const ExperimentConfig& config) {
  config.validate();
  const DatasetConfig& d = config.dataset;
  TrainData data;
  if (d.kind == DatasetKind::kTwoMoons) {
    data.train = two_moons(d.n_train, d.noise_std, derive_seed(config.seed, streams::kData));
    data.test = two_moons(d.n_test, d.noise_std, derive_seed(config.seed, streams::kTest));
  } else {
    data.train = gaussian_blobs(d.classes, d.n_train, d.separation, d.noise_std,
                                derive_seed(config.seed, streams::kData));
    data.test = gaussian_blobs(d.classes, d.n_test, d.separation, d.noise_std,
                               derive_seed(config.seed, streams::kTest));
  }
  if (d.noise.rate > 0.0) apply_noise(data.train, d.noise, derive_seed(config.seed, streams::kNoise));
  if (d.standardize) {
    Standardizer s = fit_standardizer(data.train.features);
    data.train.features = s.apply(data.train.features);
    data.test.features = s.apply(data.test.features);
    data.transform = std::move(s);
  }
  return data;
}

namespace {

Eigen::MatrixXd one_hot_rows(std::span<const std::size_t> labels, std::size_t k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                              static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  }
  return out;
}

// What one iteration feeds to the backward pass.
struct Step {
  Eigen::MatrixXd features;      // rows the gradient is taken on
  Eigen::MatrixXd coefficients;  // n x K
  std::vector<double> weights;   // per row of `features`
  std::vector<double> original_weights;  // on the unmixed minibatch
};

class Trainer {
 public:
  Trainer(const ExperimentConfig& config, TrainData data)
      : config_(config), data_(std::move(data)), k_(data_.train.num_classes) {}

  TrainResult run(const TrainObserver& observer) {
    MLPParams params = MLPParams::initialize(config_.layer_sizes(), config_.model.head,
                                             derive_seed(config_.seed, streams::kInit));
    SgdState state = SgdState::zeros_like(params);
    const std::size_t n = data_.train.size();
    const std::size_t burn_in = config_.burn_in_iterations();
    const std::size_t limit = config_.max_iterations.value_or(std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> order(n);
    std::vector<MetricsRow> metrics;
    std::size_t t = 0;
    for (std::size_t epoch = 1; epoch <= config_.epochs && t < limit; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      Rng shuffle_rng(derive_seed(config_.seed, streams::kShuffle, epoch));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      WeightTally tally;
      const double lr = config_.optimizer.rate_at(epoch - 1);
      for (std::size_t begin = 0; begin < n && t < limit; begin += config_.batch_size) {
        ++t;
        const std::size_t end = std::min(n, begin + config_.batch_size);
        const std::span<const std::size_t> idx(order.data() + begin, end - begin);
        const bool reweight = t > burn_in;
        Step step;
        try {
          step = build_step(params, idx, t, reweight);
        } catch (const Error& e) {
          fail(e.kind(), "iteration " + std::to_string(t) + ": " + e.what());
        }
        const ForwardCache cache = forward(params, step.features);
        const Gradients grads = weighted_backward(params, cache, step.coefficients, step.weights);
        sgd_step(params, grads, state, lr, config_.optimizer.momentum, config_.optimizer.nesterov);
        tally.add(idx, step.original_weights, data_.train.corrupted);
        if (observer) {
          std::vector<bool> flags(idx.size());
          for (std::size_t i = 0; i < idx.size(); ++i) flags[i] = data_.train.corrupted[idx[i]];
          observer(BatchObservation{t, epoch, reweight, idx, step.original_weights, std::move(flags), &params});
        }
      }
      metrics.push_back(evaluate(params, t, epoch, tally));
    }
    return {std::move(params), std::move(metrics), std::move(data_)};
  }

 private:
  struct WeightTally {
    double corrupted_sum = 0.0, clean_sum = 0.0;
    std::size_t corrupted_count = 0, clean_count = 0;

    void add(std::span<const std::size_t> idx, const std::vector<double>& w,
             const std::vector<bool>& corrupted) {
      const double n = static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (corrupted[idx[i]]) {
          corrupted_sum += n * w[i];
          ++corrupted_count;
        } else {
          clean_sum += n * w[i];
          ++clean_count;
        }
      }
    }
  };

  Batch gather(std::span<const std::size_t> idx) const {
    Batch b;
    b.features.resize(static_cast<Eigen::Index>(idx.size()), data_.train.features.cols());
    std::vector<std::size_t> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      b.features.row(static_cast<Eigen::Index>(i)) = data_.train.features.row(static_cast<Eigen::Index>(idx[i]));
      labels[i] = data_.train.noisy_labels[idx[i]];
    }
    b.labels = one_hot_rows(labels, k_);
    b.example_ids.assign(idx.begin(), idx.end());
    return b;
  }

  Step build_step(const MLPParams& params, std::span<const std::size_t> idx, std::size_t t,
                  bool reweight) const {
    Batch batch = gather(idx);
    const std::size_t n = idx.size();
    Step step;
    step.features = batch.features;
    step.coefficients = batch.labels;
    step.weights.assign(n, 1.0 / static_cast<double>(n));
    if (!reweight || config_.method == Method::kCE) {
      step.original_weights = step.weights;
      return step;
    }

    const ForwardCache cache = forward(params, batch.features);
    const Eigen::MatrixXd losses = loss_matrix(cache);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = data_.train.noisy_labels[idx[i]];

    const bool class_reweight = config_.method == Method::kCICW || config_.method == Method::kCICWM;
    Eigen::MatrixXd coeffs = batch.labels;
    if (class_reweight) {
      coeffs = batch_class_weights(config_.class_divergence, losses, labels, config_.gamma,
                                   Execution::kSerial);
    }
    std::vector<double> reweighted(n);
    for (std::size_t i = 0; i < n; ++i) {
      reweighted[i] = coeffs.row(static_cast<Eigen::Index>(i)).dot(losses.row(static_cast<Eigen::Index>(i)));
    }
    const SimplexWeights w = instance_weights(LossVector(reweighted), config_.instance);
    step.original_weights = w.vector();

    switch (config_.method) {
      case Method::kCE:
        break;
      case Method::kCIW:
      case Method::kCICW:
        step.coefficients = std::move(coeffs);
        step.weights = w.vector();
        break;
      case Method::kCICWM: {
        const std::uint64_t mix_seed = derive_seed(config_.seed, streams::kMix, t);
        MixResult mixed;
        if (config_.mixup.force_identity_permutation) {
          std::vector<std::size_t> identity(n);
          std::iota(identity.begin(), identity.end(), 0);
          mixed = iw_mix_with_permutation(batch, w, identity);
        } else if (config_.mixup.construction == MixConstruction::kIW) {
          mixed = iw_mix(batch, w, mix_seed);
        } else {
          mixed = siw_mix(batch, w, mix_seed);
        }
        const Eigen::MatrixXd mixed_losses = loss_matrix(forward(params, mixed.batch.features));
        MixupLoss strategy = mixup_loss_strategy(config_.mixup.loss, mixed.batch, mixed_losses,
                                                 config_.instance, config_.gamma);
        step.features = mixed.batch.features;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k_; ++j) {
            step.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                strategy.class_weights[i][j];
          }
        }
        step.weights = strategy.weights.vector();
        break;
      }
      case Method::kDynCICWM: {
        const Batch smoothed = dyn_label_smooth(batch, w, predict(cache));
        Batch mixed;
        if (config_.mixup.force_identity_permutation) {
          MixPlan plan;
          plan.partner_index.resize(n);
          std::iota(plan.partner_index.begin(), plan.partner_index.end(), 0);
          plan.mix_coefficient.assign(n, 1.0);
          mixed = apply_mix_plan(smoothed, plan);
        } else {
          mixed = vanilla_mixup(smoothed, config_.mixup.beta,
                                derive_seed(config_.seed, streams::kMix, t)).batch;
        }
        step.features = mixed.features;
        step.coefficients = mixed.labels;
        break;
      }
    }
    return step;
  }

  MetricsRow evaluate(const MLPParams& params, std::size_t t, std::size_t epoch,
                      const WeightTally& tally) const {
    const NoisyDataset& tr = data_.train;
    const ForwardCache cache = forward(params, tr.features);
    const std::vector<std::size_t> pred = predict(cache);
    MetricsRow row;
    row.iteration = t;
    row.epoch = epoch;
    double loss = 0.0;
    std::size_t clean_hits = 0, clean_total = 0, noisy_hits = 0, noisy_total = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      loss += per_example_loss(cache, i, tr.noisy_labels[i]);
      if (tr.corrupted[i]) {
        ++noisy_total;
        noisy_hits += pred[i] == tr.noisy_labels[i];
      } else {
        ++clean_total;
        clean_hits += pred[i] == tr.clean_labels[i];
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ratio = [nan](double a, std::size_t b) { return b ? a / static_cast<double>(b) : nan; };
    row.train_noisy_loss = loss / static_cast<double>(tr.size());
    row.clean_subset_accuracy = ratio(static_cast<double>(clean_hits), clean_total);
    row.noisy_subset_accuracy = ratio(static_cast<double>(noisy_hits), noisy_total);
    row.test_clean_accuracy =
        accuracy(predict_dataset(params, data_.test.features, Execution::kSerial), data_.test.clean_labels);
    row.mean_weight_corrupted = ratio(tally.corrupted_sum, tally.corrupted_count);
    row.mean_weight_clean = ratio(tally.clean_sum, tally.clean_count);
    return row;
  }

  const ExperimentConfig& config_;
  TrainData data_;
  std::size_t k_;
};

}  // namespace

TrainResult train(const ExperimentConfig& config, TrainData data, const TrainObserver& observer) {
  config.validate();
  require(data.train.features.cols() == static_cast<Eigen::Index>(config.layer_sizes().front()),
          ErrorKind::kShapeMismatch, "training features do not match the model input");
  return Trainer(config, std::move(data)).run(observer);
}

TrainResult train(const ExperimentConfig& config, const TrainObserver& observer) {
  return train(config, make_train_data(config), observer);
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "iteration,epoch,train_noisy_loss,clean_subset_accuracy,noisy_subset_accuracy,"
         "test_clean_accuracy,mean_weight_corrupted,mean_weight_clean\n";
  for (const MetricsRow& r : rows) {
    out << r.iteration << ',' << r.epoch << ',' << shortest(r.train_noisy_loss) << ','
        << shortest(r.clean_subset_accuracy) << ',' << shortest(r.noisy_subset_accuracy) << ','
        << shortest(r.test_clean_accuracy) << ',' << shortest(r.mean_weight_corrupted) << ','
        << shortest(r.mean_weight_clean) << '\n';
  }
}

}  // namespace cicw
