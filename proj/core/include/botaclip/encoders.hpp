#pragma once

#include <memory>
#include <string>

#include "botaclip/layers.hpp"

namespace botaclip {

// Common surface of the image and tabular towers used in contrastive
// training. forward() caches intermediates, backward() accumulates parameter
// gradients into each Parameter::grad and returns the input gradient.
class Encoder {
public:
  virtual ~Encoder() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual Matrix forward(const Matrix& x, Mode mode, Rng& rng) = 0;
  virtual Matrix backward(const Matrix& upstream) = 0;
  virtual Matrix infer(const Matrix& x) const = 0;
  virtual ParameterList parameters() = 0;
};

// Linear map x W^T + b, optionally followed by row l2 normalization when used
// as a projection head.
class LinearAdapter final : public Encoder {
public:
  LinearAdapter(const std::string& name, std::size_t in_dim, std::size_t out_dim,
                bool normalize = true);

  std::size_t input_dim() const override { return linear.in_dim(); }
  std::size_t output_dim() const override { return linear.out_dim(); }
  Matrix forward(const Matrix& x, Mode mode, Rng& rng) override;
  Matrix backward(const Matrix& upstream) override;
  Matrix infer(const Matrix& x) const override;
  ParameterList parameters() override { return linear.parameters(); }

  bool normalizes() const { return normalize_; }

  Linear linear;

private:
  bool normalize_;
  L2Normalize norm_;
};

// Square adapter with weight = I + N(0, noise_variance) and zero bias.
LinearAdapter init_identity_adapter(const std::string& name, std::size_t dim,
                                    double noise_variance, Rng& rng, bool normalize = true);

// Dense forward used by the `embed` command and by tests.
Matrix adapter_forward(const LinearAdapter& adapter, const Matrix& x);

struct BotaniaDims {
  std::size_t input = 3587;
  std::size_t hidden = 1536;
  std::size_t penultimate = 768;
  std::size_t classes = 232;
  double dropout = 0.4;
};

struct BotaniaOutput {
  Matrix logits;       // N x classes, empty when the head was skipped
  Matrix penultimate;  // N x penultimate, unit rows
};

// Species-cover classifier:
//   input -> Linear -> GELU -> Dropout -> Linear -> GELU -> Dropout -> Linear -> classes
// The penultimate representation is the l2-normalized output of the second
// GELU, taken before its dropout; the head consumes the dropped-out copy.
class BotaniaMLP {
public:
  explicit BotaniaMLP(const BotaniaDims& dims = {}, const std::string& name = "botania");

  void init(Rng& rng);

  // with_penultimate = false leaves penultimate empty, so classification
  // alone never trips ZeroRow on rows whose activations have all died.
  BotaniaOutput forward(const Matrix& cover, Mode mode, Rng& rng, bool with_head = true,
                        bool with_penultimate = true);
  // Either gradient may be empty. Returns nothing: the cover input is data.
  void backward(const Matrix& d_logits, const Matrix& d_penultimate);
  BotaniaOutput infer(const Matrix& cover, bool with_head = true, bool with_penultimate = true) const;

  ParameterList parameters();
  ParameterList feature_parameters();  // layers up to the penultimate output
  const BotaniaDims& dims() const { return dims_; }

  Linear layer1;
  Linear layer2;
  Linear head;

private:
  BotaniaDims dims_;
  ActivationLayer act1_{Activation::Gelu};
  ActivationLayer act2_{Activation::Gelu};
  Dropout drop1_;
  Dropout drop2_;
  L2Normalize penult_norm_;
  bool head_cached_ = false;
  bool penult_cached_ = false;
};

BotaniaOutput botania_forward(BotaniaMLP& model, const Matrix& cover, Rng& rng, Mode mode);

// Tabular tower of the botania-linear variant: Botania penultimate features
// followed by a linear projection head.
class BotaniaTower final : public Encoder {
public:
  BotaniaTower(const BotaniaDims& dims, std::size_t embed_dim);

  void init(Rng& rng);

  std::size_t input_dim() const override { return botania.dims().input; }
  std::size_t output_dim() const override { return adapter.output_dim(); }
  Matrix forward(const Matrix& x, Mode mode, Rng& rng) override;
  Matrix backward(const Matrix& upstream) override;
  Matrix infer(const Matrix& x) const override;
  ParameterList parameters() override;

  BotaniaMLP botania;
  LinearAdapter adapter;
};

// Linear -> ReLU -> Dropout -> Linear -> l2 normalize.
class MlpEncoder final : public Encoder {
public:
  MlpEncoder(const std::string& name, std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
             double dropout = 0.1);

  void init(Rng& rng);

  std::size_t input_dim() const override { return first.in_dim(); }
  std::size_t output_dim() const override { return second.out_dim(); }
  Matrix forward(const Matrix& x, Mode mode, Rng& rng) override;
  Matrix backward(const Matrix& upstream) override;
  Matrix infer(const Matrix& x) const override;
  ParameterList parameters() override;

  Linear first;
  Linear second;

private:
  ActivationLayer act_{Activation::Relu};
  Dropout drop_;
  L2Normalize norm_;
};

// Linear reduce -> LayerNorm -> (single-token MHA + residual) -> LayerNorm ->
// ReLU -> Dropout -> Linear -> l2 normalize. The residual adds the attention
// output to the reduced (pre-norm) features.
class AttentionEncoder final : public Encoder {
public:
  AttentionEncoder(const std::string& name, std::size_t in_dim, std::size_t hidden,
                   std::size_t out_dim, std::size_t heads = 4, double dropout = 0.1);

  void init(Rng& rng);

  std::size_t input_dim() const override { return reduce.in_dim(); }
  std::size_t output_dim() const override { return project.out_dim(); }
  Matrix forward(const Matrix& x, Mode mode, Rng& rng) override;
  Matrix backward(const Matrix& upstream) override;
  Matrix infer(const Matrix& x) const override;
  ParameterList parameters() override;

  Linear reduce;
  LayerNorm norm1;
  SingleTokenAttention attention;
  LayerNorm norm2;
  Linear project;

private:
  ActivationLayer act_{Activation::Relu};
  Dropout drop_;
  L2Normalize norm_;
};

// Supervised baseline: projection (l2-normalized) -> hidden GELU -> Dropout ->
// per-species head. features() is the post-GELU hidden layer.
struct BotaSPOutput {
  Matrix projected;  // N x proj, unit rows
  Matrix features;   // N x hidden, post-GELU
  Matrix logits;     // N x species
};

class BotaSPModel {
public:
  BotaSPModel(std::size_t in_dim, std::size_t species, std::size_t proj_dim = 768,
              std::size_t hidden = 1536, double dropout = 0.4);

  void init(Rng& rng);
  BotaSPOutput forward(const Matrix& x, Mode mode, Rng& rng);
  void backward(const Matrix& d_projected, const Matrix& d_logits);
  BotaSPOutput infer(const Matrix& x) const;
  ParameterList parameters();

  Linear projection;
  Linear hidden;
  Linear head;

private:
  L2Normalize proj_norm_;
  ActivationLayer act_{Activation::Gelu};
  Dropout drop_;
};

}  // namespace botaclip
