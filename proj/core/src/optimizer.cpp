#include "botaclip/optimizer.hpp"

#include <cmath>

#include "botaclip/error.hpp"

namespace botaclip {

AdamW::AdamW(ParameterList params, const AdamWConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamW::step() {
  ++step_;
  double t = static_cast<double>(step_);
  double c1 = 1.0 - std::pow(cfg_.beta1, t);
  double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        m_[k].size() != p.value.size()) {
      throw Error(ErrorKind::ShapeMismatch, "adamw: gradient shape differs for '" + p.name + "'");
    }
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    double decay = cfg_.decoupled && p.decay ? 1.0 - cfg_.lr * cfg_.weight_decay : 1.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      double g = grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = m[i] / c1;
      double vhat = v[i] / c2;
      value[i] = value[i] * decay - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

EarlyStopper::EarlyStopper(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta) {
  if (patience == 0) throw Error(ErrorKind::BadConfig, "patience must be >= 1");
}

bool EarlyStopper::update(double val_loss) {
  ++epochs_;
  if (best_epoch_ == 0 || val_loss < best_ - min_delta_) {
    best_ = val_loss;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

EarlyStopDecision early_stop(std::span<const double> val_losses, std::size_t patience) {
  EarlyStopper stopper(patience);
  EarlyStopDecision out;
  for (double loss : val_losses) {
    stopper.update(loss);
    if (stopper.should_stop()) {
      out.stop = true;
      out.stop_epoch = stopper.epochs_seen();
      break;
    }
  }
  out.best_epoch = stopper.best_epoch();
  return out;
}

}  // namespace botaclip
