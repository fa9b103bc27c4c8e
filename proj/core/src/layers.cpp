#include "botaclip/layers.hpp"

#include <cmath>
#include <string>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

[[noreturn]] void missing_cache(const char* layer) {
  throw Error(ErrorKind::MissingForwardCache, std::string(layer) + ": backward before forward");
}

void check_upstream(const Matrix& upstream, std::size_t rows, std::size_t cols, const char* layer) {
  if (upstream.rows() != rows || upstream.cols() != cols) {
    throw Error(ErrorKind::ShapeMismatch, std::string(layer) + ": upstream gradient shape");
  }
}

}  // namespace

// ---- Linear ------------------------------------------------------------------

Linear::Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim)
    : weight(name + ".weight", out_dim, in_dim), bias(name + ".bias", 1, out_dim) {}

void Linear::init_uniform(Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  for (double& w : weight.value.values()) w = (2.0 * rng.uniform() - 1.0) * bound;
  for (double& b : bias.value.values()) b = (2.0 * rng.uniform() - 1.0) * bound;
}

void Linear::init_identity(double noise_variance, Rng& rng) {
  if (in_dim() != out_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "identity init needs a square weight");
  }
  double sd = std::sqrt(noise_variance);
  for (std::size_t r = 0; r < out_dim(); ++r) {
    for (std::size_t c = 0; c < in_dim(); ++c) {
      double noise = sd > 0.0 ? sd * rng.normal() : 0.0;
      weight.value(r, c) = (r == c ? 1.0 : 0.0) + noise;
    }
  }
  bias.value.fill(0.0);
}

Matrix Linear::forward(const Matrix& x) {
  input_ = x;
  cached_ = true;
  return infer(x);
}

Matrix Linear::infer(const Matrix& x) const {
  if (x.cols() != in_dim()) {
    throw Error(ErrorKind::ShapeMismatch, weight.name + ": input width " + std::to_string(x.cols()) +
                                              " != " + std::to_string(in_dim()));
  }
  Matrix out = matmul_nt(x, weight.value);
  add_row_vector(out, bias.value.row(0));
  return out;
}

Matrix Linear::backward(const Matrix& upstream, bool want_input_grad) {
  if (!cached_) missing_cache("Linear");
  check_upstream(upstream, input_.rows(), out_dim(), "Linear");
  add_matmul_tn(weight.grad, upstream, input_);
  auto db = column_sums(upstream);
  auto g = bias.grad.row(0);
  for (std::size_t i = 0; i < db.size(); ++i) g[i] += db[i];
  if (!want_input_grad) return {};
  return matmul(upstream, weight.value);
}

// ---- activations ---------------------------------------------------------------

Matrix ActivationLayer::forward(const Matrix& x) {
  input_ = x;
  cached_ = true;
  return infer(x);
}

Matrix ActivationLayer::infer(const Matrix& x) const {
  Matrix out = x;
  if (kind_ == Activation::Gelu) {
    for (double& v : out.values()) v = gelu(v);
  } else {
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  }
  return out;
}

Matrix ActivationLayer::backward(const Matrix& upstream) const {
  if (!cached_) missing_cache("Activation");
  check_upstream(upstream, input_.rows(), input_.cols(), "Activation");
  Matrix out = upstream;
  auto x = input_.values();
  auto g = out.values();
  if (kind_ == Activation::Gelu) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= gelu_derivative(x[i]);
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? g[i] : 0.0;
  }
  return out;
}

// ---- dropout -----------------------------------------------------------------

Matrix Dropout::forward(const Matrix& x, Mode mode, Rng& rng) {
  cached_ = true;
  if (mode == Mode::Eval || rate_ <= 0.0) {
    mask_ = Matrix();
    return x;
  }
  mask_ = Matrix(x.rows(), x.cols());
  double keep_scale = 1.0 / (1.0 - rate_);
  for (double& m : mask_.values()) m = rng.uniform() >= rate_ ? keep_scale : 0.0;
  Matrix out = x;
  auto o = out.values();
  auto m = mask_.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  return out;
}

Matrix Dropout::backward(const Matrix& upstream) const {
  if (!cached_) missing_cache("Dropout");
  if (mask_.empty()) return upstream;
  check_upstream(upstream, mask_.rows(), mask_.cols(), "Dropout");
  Matrix out = upstream;
  auto o = out.values();
  auto m = mask_.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  return out;
}

// ---- layer norm ----------------------------------------------------------------

LayerNorm::LayerNorm(const std::string& name, std::size_t dim)
    : gamma(name + ".gamma", 1, dim), beta(name + ".beta", 1, dim) {
  gamma.value.fill(1.0);
}

Matrix LayerNorm::forward(const Matrix& x) {
  std::size_t d = gamma.value.cols();
  if (x.cols() != d) throw Error(ErrorKind::ShapeMismatch, gamma.name + ": input width");
  xhat_ = Matrix(x.rows(), d);
  inv_std_.assign(x.rows(), 0.0);
  Matrix out(x.rows(), d);
  auto g = gamma.value.row(0);
  auto b = beta.value.row(0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[r] = inv;
    auto h = xhat_.row(r);
    auto o = out.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      h[c] = (xr[c] - mean) * inv;
      o[c] = h[c] * g[c] + b[c];
    }
  }
  cached_ = true;
  return out;
}

Matrix LayerNorm::infer(const Matrix& x) const {
  std::size_t d = gamma.value.cols();
  if (x.cols() != d) throw Error(ErrorKind::ShapeMismatch, gamma.name + ": input width");
  Matrix out(x.rows(), d);
  auto g = gamma.value.row(0);
  auto b = beta.value.row(0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + kEps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < d; ++c) o[c] = (xr[c] - mean) * inv * g[c] + b[c];
  }
  return out;
}

Matrix LayerNorm::backward(const Matrix& upstream) {
  if (!cached_) missing_cache("LayerNorm");
  check_upstream(upstream, xhat_.rows(), xhat_.cols(), "LayerNorm");
  std::size_t d = xhat_.cols();
  double dd = static_cast<double>(d);
  Matrix dx(xhat_.rows(), d);
  auto g = gamma.value.row(0);
  auto dg = gamma.grad.row(0);
  auto db = beta.grad.row(0);
  Vector dxhat(d);
  for (std::size_t r = 0; r < xhat_.rows(); ++r) {
    auto up = upstream.row(r);
    auto h = xhat_.row(r);
    double sum_dxhat = 0.0;
    double sum_dxhat_h = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dg[c] += up[c] * h[c];
      db[c] += up[c];
      dxhat[c] = up[c] * g[c];
      sum_dxhat += dxhat[c];
      sum_dxhat_h += dxhat[c] * h[c];
    }
    auto out = dx.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      out[c] = inv_std_[r] / dd * (dd * dxhat[c] - sum_dxhat - h[c] * sum_dxhat_h);
    }
  }
  return dx;
}

// ---- attention -------------------------------------------------------------------

SingleTokenAttention::SingleTokenAttention(const std::string& name, std::size_t dim,
                                           std::size_t heads)
    : query(name + ".q_proj", dim, dim),
      key(name + ".k_proj", dim, dim),
      value(name + ".v_proj", dim, dim),
      output(name + ".out_proj", dim, dim),
      heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw Error(ErrorKind::ShapeMismatch, name + ": dim must be divisible by head count");
  }
}

void SingleTokenAttention::init_uniform(Rng& rng) {
  query.init_uniform(rng);
  key.init_uniform(rng);
  value.init_uniform(rng);
  output.init_uniform(rng);
}

Matrix SingleTokenAttention::forward(const Matrix& x) {
  // Each head attends over a single key, so its softmax weight is exactly 1
  // and the head context equals its value slice. Query/key projections do
  // not influence the output and receive zero gradient.
  return output.forward(value.forward(x));
}

Matrix SingleTokenAttention::infer(const Matrix& x) const {
  return output.infer(value.infer(x));
}

Matrix SingleTokenAttention::backward(const Matrix& upstream) {
  return value.backward(output.backward(upstream));
}

ParameterList SingleTokenAttention::parameters() {
  ParameterList out;
  for (Linear* l : {&query, &key, &value, &output}) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

// ---- normalization ---------------------------------------------------------------

Matrix L2Normalize::forward(const Matrix& x) {
  norms_ = row_norms(x);
  output_ = l2_normalize_rows(x);
  cached_ = true;
  return output_;
}

Matrix L2Normalize::backward(const Matrix& upstream) const {
  if (!cached_) missing_cache("L2Normalize");
  return l2_normalize_rows_backward(output_, norms_, upstream);
}

}  // namespace botaclip
