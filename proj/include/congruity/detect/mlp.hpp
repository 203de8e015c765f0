#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "congruity/embedding.hpp"
#include "congruity/error.hpp"
#include "congruity/random.hpp"

namespace congruity {

// Feed-forward classifier: affine+ReLU hidden layers, affine+logistic output.
// Parameters live in one flat vector; layer l occupies its weights
// (out x in, column-major) followed by its bias.
class MlpModel {
 public:
  MlpModel() = default;

  // Zero-initialized.
  explicit MlpModel(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.size() < 2) throw data_error("MLP needs at least an input and an output layer");
    if (dims_.back() != 1) throw data_error("MLP output dimension must be 1");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      if (dims_[l] == 0 || dims_[l + 1] == 0) throw data_error("MLP layer dims must be positive");
      offsets_.push_back(total);
      total += dims_[l] * dims_[l + 1] + dims_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  }

  // Gaussian weights with variance 2/fan_in, zero biases.
  static MlpModel he_init(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
    MlpModel model(std::move(layer_dims));
    Rng rng(seed);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      auto w = model.weights(l);
      const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * rng.normal();
    }
    return model;
  }

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t layer_count() const noexcept { return offsets_.size(); }
  std::size_t input_dim() const { return dims_.front(); }

  Eigen::Map<Eigen::MatrixXd> weights(std::size_t l) {
    return {params_.data() + offsets_[l], rows(l), cols(l)};
  }
  Eigen::Map<const Eigen::MatrixXd> weights(std::size_t l) const {
    return {params_.data() + offsets_[l], rows(l), cols(l)};
  }
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)};
  }
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)};
  }

  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }

 private:
  Eigen::Index rows(std::size_t l) const { return static_cast<Eigen::Index>(dims_[l + 1]); }
  Eigen::Index cols(std::size_t l) const { return static_cast<Eigen::Index>(dims_[l]); }

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

// [c / |c| ; v / |v|]
inline Eigen::VectorXd pair_features(const Embedding& text, const Embedding& image) {
  if (text.dim() != image.dim())
    throw data_error("text/image embedding dims differ: " + std::to_string(text.dim()) +
                     " vs " + std::to_string(image.dim()));
  const auto d = static_cast<Eigen::Index>(text.dim());
  Eigen::VectorXd out(2 * d);
  auto place = [&](const Embedding& e, Eigen::Index at) {
    double norm2 = 0.0;
    for (float v : e.values()) norm2 += static_cast<double>(v) * v;
    if (norm2 == 0.0) throw data_error("zero-norm embedding in classifier input");
    const double inv = 1.0 / std::sqrt(norm2);
    for (Eigen::Index i = 0; i < d; ++i) out(at + i) = e.values()[static_cast<std::size_t>(i)] * inv;
  };
  place(text, 0);
  place(image, d);
  return out;
}

namespace mlp_detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1-s(z))] written in terms of the logit.
inline double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

inline void check_input(const MlpModel& model, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != model.input_dim())
    throw data_error("classifier input has dim " + std::to_string(rows) + ", model expects " +
                     std::to_string(model.input_dim()));
}

}  // namespace mlp_detail

// Output logits (length = columns of `inputs`), one input per column.
inline Eigen::VectorXd mlp_logits(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  mlp_detail::check_input(model, inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    Eigen::MatrixXd z = model.weights(l) * a;
    z.colwise() += model.bias(l);
    if (l + 1 < model.layer_count()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  Eigen::VectorXd logits = a.row(0).transpose();
  if (!logits.allFinite()) throw data_error("non-finite activation in classifier forward pass");
  return logits;
}

inline Eigen::VectorXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  return mlp_logits(model, inputs).unaryExpr(&mlp_detail::sigmoid);
}

// Probability that (text, image) is incongruent.
inline double mlp_forward(const MlpModel& model, const Embedding& text, const Embedding& image) {
  const Eigen::VectorXd x = pair_features(text, image);
  mlp_detail::check_input(model, x.rows());
  return mlp_predict(model, x)(0);
}

// Mean binary cross-entropy; labels are 1 for incongruent, 0 for congruent.
inline double mean_bce(const MlpModel& model, const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& labels) {
  const Eigen::VectorXd z = mlp_logits(model, inputs);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += mlp_detail::bce_with_logit(z(i), labels(i));
  return total / static_cast<double>(z.size());
}

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as MlpModel::parameters()
};

// Analytic gradient of the mean BCE over the batch (columns of `inputs`).
inline LossGradient mlp_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& labels) {
  if (inputs.cols() == 0) throw data_error("mlp_gradients: empty batch");
  if (labels.size() != inputs.cols()) throw data_error("mlp_gradients: label count mismatch");
  mlp_detail::check_input(model, inputs.rows());
  const std::size_t n_layers = model.layer_count();
  const double inv_batch = 1.0 / static_cast<double>(inputs.cols());

  // activations[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<Eigen::MatrixXd> activations(n_layers + 1);
  std::vector<Eigen::MatrixXd> pre(n_layers);
  activations[0] = inputs;
  for (std::size_t l = 0; l < n_layers; ++l) {
    pre[l] = model.weights(l) * activations[l];
    pre[l].colwise() += model.bias(l);
    if (l + 1 < n_layers) activations[l + 1] = pre[l].cwiseMax(0.0);
  }
  const Eigen::RowVectorXd logits = pre.back().row(0);
  if (!logits.allFinite()) throw data_error("non-finite activation in classifier forward pass");

  LossGradient out;
  MlpModel grad_view(model.layer_dims());

  Eigen::MatrixXd delta(1, inputs.cols());
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    out.loss += mlp_detail::bce_with_logit(logits(i), labels(i));
    delta(0, i) = (mlp_detail::sigmoid(logits(i)) - labels(i)) * inv_batch;
  }
  out.loss *= inv_batch;

  for (std::size_t l = n_layers; l-- > 0;) {
    grad_view.weights(l) = delta * activations[l].transpose();
    grad_view.bias(l) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = model.weights(l).transpose() * delta;
      delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  out.gradient = std::move(grad_view.parameters());
  return out;
}

}  // namespace congruity
