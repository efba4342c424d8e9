#include "cicw/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "cicw/errors.hpp"

namespace cicw {

using nlohmann::json;

std::string to_string(Method method) {
  switch (method) {
    case Method::kCE: return "CE";
    case Method::kCIW: return "CIW";
    case Method::kCICW: return "CICW";
    case Method::kCICWM: return "CICW_M";
    case Method::kDynCICWM: return "DynCICW_M";
  }
  return "?";
}

double OptimizerConfig::rate_at(std::size_t epoch) const {
  double rate = lr;
  for (const auto& [from, value] : schedule) {
    if (epoch >= from) rate = value;
  }
  return rate;
}

std::size_t ExperimentConfig::iterations_per_epoch() const {
  return (dataset.n_train + batch_size - 1) / batch_size;
}

std::size_t ExperimentConfig::burn_in_iterations() const {
  return burn_in.in_epochs ? burn_in.amount * iterations_per_epoch() : burn_in.amount;
}

std::vector<std::size_t> ExperimentConfig::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(dataset.kind == DatasetKind::kTwoMoons ? 2 : dataset.classes);
  sizes.insert(sizes.end(), model.hidden.begin(), model.hidden.end());
  const std::size_t k = dataset.kind == DatasetKind::kTwoMoons ? 2 : dataset.classes;
  sizes.push_back(model.head == OutputHead::kSigmoidBinary ? 1 : k);
  return sizes;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::kConfig, what); };
  check(batch_size >= 1, "batch_size must be >= 1");
  check(epochs >= 1, "epochs must be >= 1");
  check(dataset.n_train >= 2 && dataset.n_test >= 2, "dataset sizes must be >= 2");
  if (dataset.kind == DatasetKind::kTwoMoons) {
    check(dataset.n_train % 2 == 0 && dataset.n_test % 2 == 0, "two_moons sizes must be even");
    check(model.head == OutputHead::kSigmoidBinary || model.head == OutputHead::kSoftmax,
          "unknown head");
  } else {
    check(dataset.classes >= 2, "blobs need classes >= 2");
    check(dataset.separation > 0.0, "blobs separation must be positive");
    if (model.head == OutputHead::kSigmoidBinary) {
      check(dataset.classes == 2, "sigmoid_binary head needs exactly 2 classes");
    }
  }
  check(dataset.noise_std >= 0.0, "noise_std must be nonnegative");
  check(dataset.noise.rate >= 0.0 && dataset.noise.rate <= 1.0, "noise rate must be in [0, 1]");
  check(optimizer.lr > 0.0, "optimizer.lr must be positive");
  check(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0, "momentum must be in [0, 1)");
  for (const auto& [epoch, rate] : optimizer.schedule) {
    (void)epoch;
    check(rate > 0.0, "schedule learning rates must be positive");
  }
  check(mixup.beta > 0.0, "mixup.beta must be positive");
  check(std::isfinite(gamma) && gamma >= 0.0, "class_divergence.gamma must be >= 0");
  try {
    instance.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, std::string("instance_divergence: ") + e.what());
  }
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), ErrorKind::kConfig, where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key()) == 0) {
      fail(ErrorKind::kConfig, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T read(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, where + "." + key + ": " + e.what());
  }
}

double read_number(const json& obj, const char* key, const std::string& where) {
  require(obj.contains(key), ErrorKind::kConfig, where + " is missing '" + key + "'");
  require(obj.at(key).is_number(), ErrorKind::kConfig, where + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

}  // namespace

DivergenceSpec parse_divergence(const json& doc) {
  const std::string where = "instance_divergence";
  reject_unknown(doc, {"family", "alpha", "lambda", "mu"}, where);
  const std::string family = read<std::string>(doc, "family", "", where);
  DivergenceSpec spec;
  if (family == "kl") {
    spec = DivergenceSpec::kl(read_number(doc, "lambda", where));
  } else if (family == "reverse_kl") {
    spec = DivergenceSpec::reverse_kl(read_number(doc, "mu", where));
  } else if (family == "alpha") {
    spec = DivergenceSpec::alpha_family(read_number(doc, "alpha", where), read_number(doc, "mu", where));
  } else if (family == "f_alpha") {
    const double a = read_number(doc, "alpha", where);
    spec = DivergenceSpec::generic(alpha_generator(a), read_number(doc, "lambda", where));
    spec.alpha = a;
  } else if (family == "bregman_log") {
    spec = DivergenceSpec::bregman_family(log_link_bregman(), read_number(doc, "lambda", where));
  } else if (family == "bregman_squared") {
    spec = DivergenceSpec::bregman_family(squared_euclidean_bregman(), read_number(doc, "lambda", where));
  } else {
    fail(ErrorKind::kConfig, "unknown instance_divergence.family '" + family +
                                 "' (kl, reverse_kl, alpha, f_alpha, bregman_log, bregman_squared)");
  }
  return spec;
}

json to_json(const DivergenceSpec& spec) {
  switch (spec.family) {
    case DivergenceFamily::kKL: return {{"family", "kl"}, {"lambda", spec.temperature}};
    case DivergenceFamily::kReverseKL: return {{"family", "reverse_kl"}, {"mu", spec.temperature}};
    case DivergenceFamily::kAlpha:
      return {{"family", "alpha"}, {"alpha", spec.alpha}, {"mu", spec.temperature}};
    case DivergenceFamily::kGenericF:
      return {{"family", "f_alpha"}, {"alpha", spec.alpha}, {"lambda", spec.temperature}};
    case DivergenceFamily::kBregman:
      return {{"family", spec.bregman && spec.bregman->name == "squared_euclidean" ? "bregman_squared"
                                                                                  : "bregman_log"},
              {"lambda", spec.temperature}};
  }
  return {};
}

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc,
                 {"seed", "dataset", "model", "optimizer", "method", "instance_divergence",
                  "class_divergence", "mixup", "burn_in", "epochs", "batch_size",
                  "max_iterations", "output_dir"},
                 "config");
  ExperimentConfig c;
  c.seed = read<std::uint64_t>(doc, "seed", 0, "config");
  c.epochs = read<std::size_t>(doc, "epochs", c.epochs, "config");
  c.batch_size = read<std::size_t>(doc, "batch_size", c.batch_size, "config");
  if (doc.contains("max_iterations")) c.max_iterations = read<std::size_t>(doc, "max_iterations", 0, "config");
  if (doc.contains("output_dir")) c.output_dir = read<std::string>(doc, "output_dir", "", "config");

  const std::string method = read<std::string>(doc, "method", "CE", "config");
  if (method == "CE") c.method = Method::kCE;
  else if (method == "CIW") c.method = Method::kCIW;
  else if (method == "CICW") c.method = Method::kCICW;
  else if (method == "CICW_M") c.method = Method::kCICWM;
  else if (method == "DynCICW_M") c.method = Method::kDynCICWM;
  else fail(ErrorKind::kConfig, "unknown method '" + method + "' (CE, CIW, CICW, CICW_M, DynCICW_M)");

  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    const std::string where = "dataset";
    reject_unknown(d, {"generator", "n_train", "n_test", "noise_std", "classes", "separation",
                       "standardize", "noise"}, where);
    const std::string gen = read<std::string>(d, "generator", "two_moons", where);
    if (gen == "two_moons") c.dataset.kind = DatasetKind::kTwoMoons;
    else if (gen == "blobs") c.dataset.kind = DatasetKind::kBlobs;
    else fail(ErrorKind::kConfig, "unknown dataset.generator '" + gen + "' (two_moons, blobs)");
    c.dataset.n_train = read<std::size_t>(d, "n_train", c.dataset.n_train, where);
    c.dataset.n_test = read<std::size_t>(d, "n_test", c.dataset.n_test, where);
    c.dataset.noise_std = read<double>(d, "noise_std", c.dataset.noise_std, where);
    c.dataset.classes = read<std::size_t>(d, "classes", c.dataset.kind == DatasetKind::kTwoMoons ? 2 : 4, where);
    c.dataset.separation = read<double>(d, "separation", c.dataset.separation, where);
    c.dataset.standardize = read<bool>(d, "standardize", c.dataset.standardize, where);
    if (d.contains("noise")) {
      const json& n = d.at("noise");
      reject_unknown(n, {"kind", "rate", "mapping"}, "dataset.noise");
      const std::string kind = read<std::string>(n, "kind", "symmetric", "dataset.noise");
      if (kind == "symmetric") c.dataset.noise.kind = NoiseKind::kSymmetric;
      else if (kind == "asymmetric") c.dataset.noise.kind = NoiseKind::kAsymmetric;
      else fail(ErrorKind::kConfig, "unknown dataset.noise.kind '" + kind + "'");
      c.dataset.noise.rate = read<double>(n, "rate", 0.0, "dataset.noise");
      if (n.contains("mapping")) {
        const json& m = n.at("mapping");
        require(m.is_object(), ErrorKind::kConfig, "dataset.noise.mapping must map class ids to class ids");
        for (const auto& item : m.items()) {
          std::size_t from = 0;
          try {
            from = static_cast<std::size_t>(std::stoul(item.key()));
          } catch (const std::exception&) {
            fail(ErrorKind::kConfig, "dataset.noise.mapping key '" + item.key() + "' is not a class id");
          }
          require(item.value().is_number_unsigned(), ErrorKind::kConfig,
                  "dataset.noise.mapping values must be class ids");
          c.dataset.noise.mapping[from] = item.value().get<std::size_t>();
        }
      }
    }
  }
  if (c.dataset.kind == DatasetKind::kBlobs) c.model.head = OutputHead::kSoftmax;

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m, {"hidden", "head"}, "model");
    c.model.hidden = read<std::vector<std::size_t>>(m, "hidden", c.model.hidden, "model");
    if (m.contains("head")) {
      try {
        c.model.head = parse_output_head(read<std::string>(m, "head", "", "model"));
      } catch (const Error& e) {
        fail(ErrorKind::kConfig, std::string("model.head: ") + e.what());
      }
    }
  }

  if (doc.contains("optimizer")) {
    const json& o = doc.at("optimizer");
    reject_unknown(o, {"lr", "momentum", "nesterov", "schedule"}, "optimizer");
    c.optimizer.lr = read<double>(o, "lr", c.optimizer.lr, "optimizer");
    c.optimizer.momentum = read<double>(o, "momentum", c.optimizer.momentum, "optimizer");
    c.optimizer.nesterov = read<bool>(o, "nesterov", c.optimizer.nesterov, "optimizer");
    c.optimizer.schedule =
        read<std::vector<std::pair<std::size_t, double>>>(o, "schedule", {}, "optimizer");
  }

  const bool needs_instance = c.method != Method::kCE;
  const bool needs_class = c.method == Method::kCICW || c.method == Method::kCICWM;
  const bool needs_mixup = c.method == Method::kCICWM || c.method == Method::kDynCICWM;
  if (doc.contains("instance_divergence")) {
    try {
      c.instance = parse_divergence(doc.at("instance_divergence"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kConfig) throw;
      fail(ErrorKind::kConfig, std::string("instance_divergence: ") + e.what());
    }
  } else {
    require(!needs_instance, ErrorKind::kConfig, "method " + method + " needs instance_divergence");
  }
  if (doc.contains("class_divergence")) {
    const json& cd = doc.at("class_divergence");
    reject_unknown(cd, {"kind", "gamma"}, "class_divergence");
    try {
      c.class_divergence = parse_class_divergence(read<std::string>(cd, "kind", "tv", "class_divergence"));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, std::string("class_divergence.kind: ") + e.what());
    }
    c.gamma = read_number(cd, "gamma", "class_divergence");
  } else {
    require(!needs_class, ErrorKind::kConfig, "method " + method + " needs class_divergence");
  }
  if (doc.contains("mixup")) {
    const json& mx = doc.at("mixup");
    reject_unknown(mx, {"construction", "loss", "beta", "force_identity_permutation"}, "mixup");
    const std::string cons = read<std::string>(mx, "construction", "iw", "mixup");
    if (cons == "iw") c.mixup.construction = MixConstruction::kIW;
    else if (cons == "siw") c.mixup.construction = MixConstruction::kSIW;
    else fail(ErrorKind::kConfig, "unknown mixup.construction '" + cons + "' (iw, siw)");
    const std::string loss = read<std::string>(mx, "loss", "base", "mixup");
    if (loss == "base") c.mixup.loss = MixupLossMode::kMixupBase;
    else if (loss == "reweight") c.mixup.loss = MixupLossMode::kMixupReweight;
    else fail(ErrorKind::kConfig, "unknown mixup.loss '" + loss + "' (base, reweight)");
    c.mixup.beta = read<double>(mx, "beta", c.mixup.beta, "mixup");
    c.mixup.force_identity_permutation =
        read<bool>(mx, "force_identity_permutation", false, "mixup");
  } else {
    require(!needs_mixup, ErrorKind::kConfig, "method " + method + " needs mixup");
  }
  if (doc.contains("burn_in")) {
    const json& b = doc.at("burn_in");
    reject_unknown(b, {"epochs", "iterations"}, "burn_in");
    require(b.contains("epochs") != b.contains("iterations"), ErrorKind::kConfig,
            "burn_in takes exactly one of 'epochs' or 'iterations'");
    c.burn_in.in_epochs = b.contains("epochs");
    c.burn_in.amount = read<std::size_t>(b, c.burn_in.in_epochs ? "epochs" : "iterations", 0, "burn_in");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kConfig, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, "malformed config '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json noise = {{"kind", c.dataset.noise.kind == NoiseKind::kSymmetric ? "symmetric" : "asymmetric"},
                {"rate", c.dataset.noise.rate}};
  if (!c.dataset.noise.mapping.empty()) {
    json m = json::object();
    for (const auto& [from, to] : c.dataset.noise.mapping) m[std::to_string(from)] = to;
    noise["mapping"] = m;
  }
  json doc = {
      {"seed", c.seed},
      {"dataset",
       {{"generator", c.dataset.kind == DatasetKind::kTwoMoons ? "two_moons" : "blobs"},
        {"n_train", c.dataset.n_train},
        {"n_test", c.dataset.n_test},
        {"noise_std", c.dataset.noise_std},
        {"classes", c.dataset.classes},
        {"separation", c.dataset.separation},
        {"standardize", c.dataset.standardize},
        {"noise", noise}}},
      {"model", {{"hidden", c.model.hidden}, {"head", to_string(c.model.head)}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"momentum", c.optimizer.momentum},
        {"nesterov", c.optimizer.nesterov},
        {"schedule", c.optimizer.schedule}}},
      {"method", to_string(c.method)},
      {"instance_divergence", to_json(c.instance)},
      {"class_divergence", {{"kind", to_string(c.class_divergence)}, {"gamma", c.gamma}}},
      {"mixup",
       {{"construction", c.mixup.construction == MixConstruction::kIW ? "iw" : "siw"},
        {"loss", c.mixup.loss == MixupLossMode::kMixupBase ? "base" : "reweight"},
        {"beta", c.mixup.beta},
        {"force_identity_permutation", c.mixup.force_identity_permutation}}},
      {"burn_in", {{c.burn_in.in_epochs ? "epochs" : "iterations", c.burn_in.amount}}},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
  };
  if (c.max_iterations) doc["max_iterations"] = *c.max_iterations;
  if (c.output_dir) doc["output_dir"] = *c.output_dir;
  return doc;
}

}  // namespace cicw
