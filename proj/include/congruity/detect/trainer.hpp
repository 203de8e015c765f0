#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "congruity/datagen.hpp"
#include "congruity/detect/adamw.hpp"
#include "congruity/detect/mlp.hpp"
#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/ndjson.hpp"
#include "congruity/random.hpp"

namespace congruity {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double weight_decay = 0.01;
  double grad_clip_norm = 1.0;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 5;
  std::uint64_t seed = 0;
  // Input is 2 x embedding dim, output is 1.
  std::vector<std::size_t> hidden_dims = {512, 128};

  void validate() const {
    if (!(learning_rate > 0.0) || batch_size == 0 || !(weight_decay >= 0.0) ||
        !(grad_clip_norm > 0.0) || max_epochs == 0 || early_stop_patience == 0)
      throw data_error("train config values must be positive");
    for (auto d : hidden_dims)
      if (d == 0) throw data_error("hidden layer sizes must be positive");
  }

  std::vector<std::size_t> layer_dims(std::size_t embedding_dim) const {
    std::vector<std::size_t> dims{2 * embedding_dim};
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(1);
    return dims;
  }
};

inline json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"weight_decay", c.weight_decay},
          {"grad_clip_norm", c.grad_clip_norm},
          {"max_epochs", c.max_epochs},
          {"early_stop_patience", c.early_stop_patience},
          {"seed", c.seed},
          {"hidden_dims", c.hidden_dims}};
}

// Reads only the keys present, keeping defaults for the rest.
inline TrainConfig train_config_from_json(const json& j, TrainConfig c = {}) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.seed = j.value("seed", c.seed);
  c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
  return c;
}

// Classifier inputs, one sample per column; labels 1 = incongruent.
struct FeatureSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;
  std::vector<std::string> sample_ids;

  Eigen::Index size() const { return inputs.cols(); }
};

// Title embedding of title_record_id, thumbnail embedding of image_record_id.
inline FeatureSet build_features(const std::vector<PairSample>& samples,
                                 const EmbeddingStore& store) {
  std::vector<std::string> missing;
  for (const auto& s : samples) {
    if (!store.contains(title_key(s.title_record_id))) missing.push_back(title_key(s.title_record_id));
    if (!store.contains(thumb_key(s.image_record_id))) missing.push_back(thumb_key(s.image_record_id));
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw IdListError(ErrorKind::data, "samples reference missing embeddings", std::move(missing));
  }
  FeatureSet set;
  const auto n = static_cast<Eigen::Index>(samples.size());
  set.inputs.resize(2 * static_cast<Eigen::Index>(store.dim()), n);
  set.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    set.inputs.col(i) =
        pair_features(store.at(title_key(s.title_record_id)), store.at(thumb_key(s.image_record_id)));
    set.labels(i) = s.label == Congruity::incongruent ? 1.0 : 0.0;
    set.sample_ids.push_back(s.sample_id);
  }
  return set;
}

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool improved = false;
};

struct TrainResult {
  MlpModel model;  // parameters from the best validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
};

inline json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"validation_loss", e.validation_loss},
          {"improved", e.improved}};
}

// Mini-batch AdamW on mean BCE with global-norm clipping and early stopping
// on validation loss. Single-threaded; identical inputs and seed give
// bitwise-identical results. Embeddings are inputs only.
inline TrainResult train_mlp(const FeatureSet& train, const FeatureSet& validation,
                             const TrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw data_error("train split is empty");
  if (validation.size() == 0) throw data_error("validation split is empty");
  if (train.inputs.rows() % 2 != 0) throw data_error("classifier inputs must have even dim");
  if (validation.inputs.rows() != train.inputs.rows())
    throw data_error("train/validation input dims differ");
  for (const FeatureSet* split : {&train, &validation}) {
    const double positives = split->labels.sum();
    if (positives == 0.0 || positives == static_cast<double>(split->size()))
      throw data_error("train and validation splits must contain both classes");
  }

  const auto dims = config.layer_dims(static_cast<std::size_t>(train.inputs.rows() / 2));
  MlpModel model = MlpModel::he_init(dims, derive_seed(config.seed, 1));
  AdamW optimizer(model.parameters().size(),
                  {config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  Rng shuffle_rng(derive_seed(config.seed, 2));

  TrainResult result;
  result.model = model;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t epochs_without_improvement = 0;
  const auto batch = static_cast<Eigen::Index>(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<Eigen::Index>(order));
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (Eigen::Index start = 0; start < train.size(); start += batch, ++batch_index) {
      const Eigen::Index count = std::min(batch, train.size() - start);
      Eigen::MatrixXd x(train.inputs.rows(), count);
      Eigen::VectorXd y(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        x.col(i) = train.inputs.col(src);
        y(i) = train.labels(src);
      }
      const std::string where =
          "training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index);
      LossGradient lg;
      try {
        lg = mlp_gradients(model, x, y);
      } catch (const Error& e) {
        throw data_error(where + ": " + e.what());
      }
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) throw data_error(where);
      clip_grad_norm(lg.gradient, config.grad_clip_norm);
      optimizer.step(model.parameters(), lg.gradient);
      loss_sum += lg.loss * static_cast<double>(count);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train.size());
    entry.validation_loss = mean_bce(model, validation.inputs, validation.labels);
    if (!std::isfinite(entry.validation_loss))
      throw data_error("validation loss became non-finite at epoch " + std::to_string(epoch));
    if (entry.validation_loss < result.best_validation_loss) {
      entry.improved = true;
      result.best_validation_loss = entry.validation_loss;
      result.best_epoch = epoch;
      result.model = model;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
    }
    result.log.push_back(entry);
    if (epochs_without_improvement >= config.early_stop_patience) break;
  }
  return result;
}

inline TrainResult train_mlp(const std::vector<PairSample>& train,
                             const std::vector<PairSample>& validation,
                             const EmbeddingStore& store, const TrainConfig& config) {
  return train_mlp(build_features(train, store), build_features(validation, store), config);
}

}  // namespace congruity
