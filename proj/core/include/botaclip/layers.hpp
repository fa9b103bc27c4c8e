#pragma once

#include <string>

#include "botaclip/numerics.hpp"
#include "botaclip/parameter.hpp"

namespace botaclip {

enum class Mode { Train, Eval };

// Building blocks with hand-written reverse passes. Every layer caches what
// its backward needs during forward(); backward() without a preceding
// forward() throws MissingForwardCache. infer() is the cache-free, const
// evaluation path used for embedding export.

class Linear {
public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim);

  // U(-1/sqrt(in), 1/sqrt(in)) for weight and bias (PyTorch's default).
  void init_uniform(Rng& rng);
  void init_identity(double noise_variance, Rng& rng);

  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  // Accumulates dW, db. Returns dX unless want_input_grad is false.
  Matrix backward(const Matrix& upstream, bool want_input_grad = true);

  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }
  ParameterList parameters() { return {&weight, &bias}; }

  Parameter weight;  // out x in
  Parameter bias;    // 1 x out

private:
  Matrix input_;
  bool cached_ = false;
};

enum class Activation { Gelu, Relu };

class ActivationLayer {
public:
  explicit ActivationLayer(Activation kind = Activation::Gelu) : kind_(kind) {}

  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  Matrix backward(const Matrix& upstream) const;

private:
  Activation kind_;
  Matrix input_;
  bool cached_ = false;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) in train mode, eval
// mode is the identity.
class Dropout {
public:
  explicit Dropout(double rate = 0.0) : rate_(rate) {}

  Matrix forward(const Matrix& x, Mode mode, Rng& rng);
  Matrix backward(const Matrix& upstream) const;
  double rate() const { return rate_; }

private:
  double rate_;
  Matrix mask_;  // empty in eval mode
  bool cached_ = false;
};

class LayerNorm {
public:
  static constexpr double kEps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim);

  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  Matrix backward(const Matrix& upstream);
  ParameterList parameters() { return {&gamma, &beta}; }

  Parameter gamma;
  Parameter beta;

private:
  Matrix xhat_;
  Vector inv_std_;
  bool cached_ = false;
};

// Multi-head self-attention over a sequence of length one. The softmax runs
// over a single key and is identically 1, so the block reduces to
// W_O W_V x; the Q/K projections exist and receive (zero) gradients.
class SingleTokenAttention {
public:
  SingleTokenAttention() = default;
  SingleTokenAttention(const std::string& name, std::size_t dim, std::size_t heads);

  void init_uniform(Rng& rng);
  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  Matrix backward(const Matrix& upstream);
  ParameterList parameters();

  std::size_t heads() const { return heads_; }

  Linear query;
  Linear key;
  Linear value;
  Linear output;

private:
  std::size_t heads_ = 1;
};

class L2Normalize {
public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& upstream) const;

private:
  Matrix output_;
  Vector norms_;
  bool cached_ = false;
};

}  // namespace botaclip
