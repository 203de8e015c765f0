#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace congruity {

struct AdamWOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay: p <- p (1 - lr wd), then the
// bias-corrected Adam step.
class AdamW {
 public:
  explicit AdamW(Eigen::Index n_params, AdamWOptions options = {})
      : options_(options),
        m_(Eigen::VectorXd::Zero(n_params)),
        v_(Eigen::VectorXd::Zero(n_params)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    const auto& o = options_;
    m_ = o.beta1 * m_ + (1.0 - o.beta1) * grad;
    v_ = o.beta2 * v_ + (1.0 - o.beta2) * grad.cwiseProduct(grad);
    const double m_correction = 1.0 - std::pow(o.beta1, static_cast<double>(t_));
    const double v_correction = 1.0 - std::pow(o.beta2, static_cast<double>(t_));
    params *= 1.0 - o.learning_rate * o.weight_decay;
    params.array() -= o.learning_rate * (m_.array() / m_correction) /
                      ((v_.array() / v_correction).sqrt() + o.epsilon);
  }

  long steps() const noexcept { return t_; }
  const AdamWOptions& options() const noexcept { return options_; }

 private:
  AdamWOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

// Rescales `grad` in place so its L2 norm is at most `max_norm`; returns the
// norm before clipping.
inline double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace congruity
