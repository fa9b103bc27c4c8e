#pragma once

#include <string>
#include <vector>

#include "botaclip/numerics.hpp"

namespace botaclip {

// A learnable tensor together with its accumulated gradient. The gradient
// buffer always has the shape of the value and is zeroed between optimizer
// steps.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_, std::size_t rows, std::size_t cols, bool decay_ = true)
      : name(std::move(name_)), value(rows, cols), grad(rows, cols), decay(decay_) {}

  std::string name;
  Matrix value;
  Matrix grad;
  // Whether decoupled weight decay applies.
  bool decay = true;

  void zero_grad() { grad.fill(0.0); }
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);

// Copy of parameter values, used to restore the best checkpoint after early
// stopping.
struct ParameterSnapshot {
  std::vector<std::string> names;
  std::vector<Matrix> values;
};

ParameterSnapshot snapshot(const ParameterList& params);
void restore(const ParameterList& params, const ParameterSnapshot& snap);

// Flattened view helpers used by gradient checks.
std::size_t parameter_count(const ParameterList& params);

}  // namespace botaclip
