#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "botaclip/parameter.hpp"

namespace botaclip {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
  // false: plain Adam, weight decay ignored.
  bool decoupled = true;
};

// Bias-corrected Adam with decoupled weight decay p <- p (1 - lr wd) applied
// before the Adam delta. Parameters with decay == false are never decayed.
class AdamW {
public:
  AdamW(ParameterList params, const AdamWConfig& cfg);

  // Uses each parameter's accumulated grad.
  void step();

  std::size_t steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }
  const ParameterList& parameters() const { return params_; }

private:
  ParameterList params_;
  AdamWConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t step_ = 0;
};

// Validation-loss early stopping. An epoch improves when its loss is below
// the best so far by more than min_delta.
class EarlyStopper {
public:
  explicit EarlyStopper(std::size_t patience, double min_delta = 1e-12);

  // Returns true when this epoch is the new best.
  bool update(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }

  std::size_t epochs_seen() const { return epochs_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update
  double best_loss() const { return best_; }

private:
  std::size_t patience_;
  double min_delta_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

struct EarlyStopDecision {
  bool stop = false;
  std::size_t stop_epoch = 0;  // 1-based epoch after which training stops, 0 if never
  std::size_t best_epoch = 0;
};

// Replays a validation-loss history through EarlyStopper.
EarlyStopDecision early_stop(std::span<const double> val_losses, std::size_t patience);

}  // namespace botaclip
