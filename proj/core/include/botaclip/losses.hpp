#pragma once

#include <cstddef>
#include <span>

#include "botaclip/numerics.hpp"

namespace botaclip {

// Learnable logit temperature (log-scale) and bias of the sigmoid
// contrastive loss.
struct ScalarsTauB {
  static constexpr double kTauMin = -10.0;
  static constexpr double kTauMax = 10.0;

  double tau = 2.302585092994046;  // log 10
  double b = -10.0;

  double clamped_tau() const;
  double scale() const;  // exp(clamped tau)
};

// +1 on the diagonal (positive pairs), -1 elsewhere.
Matrix pair_labels(std::size_t n);

// l_ij = (z_img_i . z_tab_j) exp(tau) + b
Matrix scl_logits(const Matrix& z_img, const Matrix& z_tab, const ScalarsTauB& s);

// -(1/N^2) sum_ij log sigma(w_ij l_ij)
double sigmoid_contrastive_loss(const Matrix& logits, const Matrix& labels);
double sigmoid_contrastive_loss(const Matrix& logits);

// W_ij = ((1 + s_ij) / 2)^2 for an original-similarity matrix s.
Matrix similarity_weights(const Matrix& original_similarity);

// (1/N^2) sum_ij W_ij (Img_i.Img_j - z_i.z_j)^2. Rows of both inputs must be
// unit-norm within 1e-6 (NotNormalized otherwise).
double similarity_regularizer(const Matrix& img_orig, const Matrix& z_img);

// L_SCL + lambda * R
double botaclip_loss(const Matrix& img_orig, const Matrix& z_img, const Matrix& z_tab,
                     const ScalarsTauB& s, double lambda);

// -log softmax(logits)[label]
double cross_entropy(std::span<const double> logits, std::size_t label);

struct CrossEntropyResult {
  double loss = 0.0;      // mean over rows
  Matrix d_logits;        // gradient of the mean
};
CrossEntropyResult cross_entropy_batch(const Matrix& logits, std::span<const std::size_t> labels);

// Mean multi-label binary cross-entropy over all N*S logits plus
// lambda * mean(W o (S_new - S_orig)^2).
double botasp_loss(const Matrix& logits, const Matrix& targets, const Matrix& z_orig,
                   const Matrix& z_new, double lambda = 100.0);

struct LossBreakdown {
  double total = 0.0;
  double scl = 0.0;  // contrastive (or BCE for the supervised baseline)
  double reg = 0.0;  // similarity-preservation term, before lambda
};

// Combined contrastive objective with cached forward state. The
// regularizer is always evaluated and reported; it enters the total (and the
// gradient) scaled by lambda.
class BotaclipObjective {
public:
  explicit BotaclipObjective(double lambda = 1.0) : lambda_(lambda) {}

  LossBreakdown forward(const Matrix& img_orig, const Matrix& z_img, const Matrix& z_tab,
                        const ScalarsTauB& s);

  struct Gradients {
    Matrix z_img;
    Matrix z_tab;
    double tau = 0.0;
    double b = 0.0;
  };
  // Throws MissingForwardCache when no forward() preceded it.
  Gradients backward() const;

  double lambda() const { return lambda_; }

private:
  double lambda_;
  bool cached_ = false;
  ScalarsTauB scalars_;
  Matrix z_img_;
  Matrix z_tab_;
  Matrix dots_;          // z_img z_tab^T
  Matrix d_logits_;      // dL_SCL / dl
  Matrix weighted_gap_;  // W o (S_orig - z z^T)
};

class BotaspObjective {
public:
  explicit BotaspObjective(double lambda = 100.0) : lambda_(lambda) {}

  LossBreakdown forward(const Matrix& logits, const Matrix& targets, const Matrix& z_orig,
                        const Matrix& z_new);

  struct Gradients {
    Matrix logits;
    Matrix z_new;
  };
  Gradients backward() const;

private:
  double lambda_;
  bool cached_ = false;
  Matrix d_logits_;
  Matrix z_new_;
  Matrix weighted_gap_;
};

}  // namespace botaclip
