#include "botaclip/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

constexpr double kUnitTolerance = 1e-6;

void require_unit_rows(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double n = norm(m.row(r));
    if (std::abs(n - 1.0) > kUnitTolerance) {
      throw Error(ErrorKind::NotNormalized, std::string(what) + " row " + std::to_string(r) +
                                                " has norm " + std::to_string(n));
    }
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::ShapeMismatch, what);
  }
}

// W o (S_orig - S_new) and the regularizer value.
double weighted_gap(const Matrix& s_orig, const Matrix& s_new, Matrix& gap) {
  std::size_t n = s_orig.rows();
  gap = Matrix(n, n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double w = 0.5 * (1.0 + s_orig(i, j));
      w *= w;
      double diff = s_orig(i, j) - s_new(i, j);
      gap(i, j) = w * diff;
      sum += w * diff * diff;
    }
  }
  return n ? sum / static_cast<double>(n * n) : 0.0;
}

}  // namespace

double ScalarsTauB::clamped_tau() const { return std::clamp(tau, kTauMin, kTauMax); }

double ScalarsTauB::scale() const { return std::exp(clamped_tau()); }

Matrix pair_labels(std::size_t n) {
  Matrix m(n, n, -1.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix scl_logits(const Matrix& z_img, const Matrix& z_tab, const ScalarsTauB& s) {
  if (z_img.cols() != z_tab.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "scl_logits: embedding widths differ");
  }
  Matrix logits = gram(z_img, z_tab);
  double scale = s.scale();
  for (double& v : logits.values()) v = v * scale + s.b;
  return logits;
}

double sigmoid_contrastive_loss(const Matrix& logits, const Matrix& labels) {
  if (logits.rows() != logits.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "sigmoid_contrastive_loss: logits must be square");
  }
  require_same_shape(logits, labels, "sigmoid_contrastive_loss: labels shape");
  std::size_t n = logits.rows();
  double sum = 0.0;
  auto l = logits.values();
  auto w = labels.values();
  for (std::size_t k = 0; k < l.size(); ++k) sum += log_sigmoid(w[k] * l[k]);
  return n ? -sum / static_cast<double>(n * n) : 0.0;
}

double sigmoid_contrastive_loss(const Matrix& logits) {
  return sigmoid_contrastive_loss(logits, pair_labels(logits.rows()));
}

Matrix similarity_weights(const Matrix& original_similarity) {
  Matrix w = original_similarity;
  for (double& v : w.values()) {
    double h = 0.5 * (1.0 + v);
    v = h * h;
  }
  return w;
}

double similarity_regularizer(const Matrix& img_orig, const Matrix& z_img) {
  if (img_orig.rows() != z_img.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "similarity_regularizer: batch sizes differ");
  }
  require_unit_rows(img_orig, "original embedding");
  require_unit_rows(z_img, "projected embedding");
  Matrix gap;
  return weighted_gap(gram(img_orig, img_orig), gram(z_img, z_img), gap);
}

double botaclip_loss(const Matrix& img_orig, const Matrix& z_img, const Matrix& z_tab,
                     const ScalarsTauB& s, double lambda) {
  BotaclipObjective objective(lambda);
  return objective.forward(img_orig, z_img, z_tab, s).total;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw Error(ErrorKind::BadLabel, "label " + std::to_string(label) + " outside [0, " +
                                         std::to_string(logits.size()) + ")");
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return -(logits[label] - mx - std::log(sum));
}

CrossEntropyResult cross_entropy_batch(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "cross_entropy_batch: label count");
  }
  CrossEntropyResult out;
  out.d_logits = Matrix(logits.rows(), logits.cols());
  double n = static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out.loss += cross_entropy(row, labels[r]);
    double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    auto g = out.d_logits.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      g[c] = (std::exp(row[c] - mx) / sum - (c == labels[r] ? 1.0 : 0.0)) / n;
    }
  }
  if (logits.rows()) out.loss /= n;
  return out;
}

double botasp_loss(const Matrix& logits, const Matrix& targets, const Matrix& z_orig,
                   const Matrix& z_new, double lambda) {
  BotaspObjective objective(lambda);
  return objective.forward(logits, targets, z_orig, z_new).total;
}

// ---- BotaclipObjective --------------------------------------------------------

LossBreakdown BotaclipObjective::forward(const Matrix& img_orig, const Matrix& z_img,
                                         const Matrix& z_tab, const ScalarsTauB& s) {
  if (z_img.rows() != z_tab.rows() || img_orig.rows() != z_img.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "botaclip objective: batch sizes differ");
  }
  std::size_t n = z_img.rows();
  double inv_n2 = 1.0 / static_cast<double>(n * n);

  z_img_ = z_img;
  z_tab_ = z_tab;
  scalars_ = s;
  dots_ = gram(z_img, z_tab);
  double scale = s.scale();

  LossBreakdown out;
  d_logits_ = Matrix(n, n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double w = i == j ? 1.0 : -1.0;
      double logit = dots_(i, j) * scale + s.b;
      sum += log_sigmoid(w * logit);
      d_logits_(i, j) = -inv_n2 * w * sigmoid(-w * logit);
    }
  }
  out.scl = -sum / static_cast<double>(n * n);  // same rounding as sigmoid_contrastive_loss

  require_unit_rows(img_orig, "original embedding");
  require_unit_rows(z_img, "projected embedding");
  out.reg = weighted_gap(gram(img_orig, img_orig), gram(z_img, z_img), weighted_gap_);
  out.total = out.scl + lambda_ * out.reg;
  cached_ = true;
  return out;
}

BotaclipObjective::Gradients BotaclipObjective::backward() const {
  if (!cached_) throw Error(ErrorKind::MissingForwardCache, "botaclip objective: no forward pass");
  std::size_t n = z_img_.rows();
  double scale = scalars_.scale();
  Gradients g;
  g.z_img = scaled(matmul(d_logits_, z_tab_), scale);
  g.z_tab = scaled(matmul_tn(d_logits_, z_img_), scale);
  bool tau_active = scalars_.tau >= ScalarsTauB::kTauMin && scalars_.tau <= ScalarsTauB::kTauMax;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      g.b += d_logits_(i, j);
      if (tau_active) g.tau += d_logits_(i, j) * dots_(i, j) * scale;
    }
  }
  if (lambda_ != 0.0 && n > 0) {
    double coef = -4.0 * lambda_ / static_cast<double>(n * n);
    add_inplace(g.z_img, matmul(weighted_gap_, z_img_), coef);
  }
  return g;
}

// ---- BotaspObjective ------------------------------------------------------------

LossBreakdown BotaspObjective::forward(const Matrix& logits, const Matrix& targets,
                                       const Matrix& z_orig, const Matrix& z_new) {
  require_same_shape(logits, targets, "botasp: logits/targets shape");
  if (z_orig.rows() != z_new.rows() || z_orig.rows() != logits.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "botasp: batch sizes differ");
  }
  require_unit_rows(z_orig, "original embedding");
  require_unit_rows(z_new, "projected embedding");

  LossBreakdown out;
  double count = static_cast<double>(logits.size());
  d_logits_ = Matrix(logits.rows(), logits.cols());
  auto x = logits.values();
  auto y = targets.values();
  auto g = d_logits_.values();
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sum += softplus(x[k]) - y[k] * x[k];
    g[k] = (sigmoid(x[k]) - y[k]) / count;
  }
  out.scl = count > 0 ? sum / count : 0.0;
  out.reg = weighted_gap(gram(z_orig, z_orig), gram(z_new, z_new), weighted_gap_);
  out.total = out.scl + lambda_ * out.reg;
  z_new_ = z_new;
  cached_ = true;
  return out;
}

BotaspObjective::Gradients BotaspObjective::backward() const {
  if (!cached_) throw Error(ErrorKind::MissingForwardCache, "botasp objective: no forward pass");
  Gradients g;
  g.logits = d_logits_;
  std::size_t n = z_new_.rows();
  g.z_new = Matrix(n, z_new_.cols());
  if (lambda_ != 0.0 && n > 0) {
    g.z_new = scaled(matmul(weighted_gap_, z_new_), -4.0 * lambda_ / static_cast<double>(n * n));
  }
  return g;
}

}  // namespace botaclip
