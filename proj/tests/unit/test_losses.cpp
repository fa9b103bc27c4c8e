#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "botaclip/losses.hpp"
#include "testing.hpp"

using namespace botaclip;
using namespace botaclip::testing;

namespace {

constexpr int kSeeds = 25;
constexpr double kGradTol = 1e-5;

// -log sigma(x) in extended precision.
long double nls(long double x) { return std::log1p(std::exp(-x)); }

ScalarsTauB scalars(double tau, double b) {
  ScalarsTauB s;
  s.tau = tau;
  s.b = b;
  return s;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& p) { return select_rows(m, p); }

}  // namespace

TEST(Logits, IdentityForOrthonormalPairs) {
  Matrix z = Matrix::identity(3);
  EXPECT_EQ(scl_logits(z, z, scalars(0.0, 0.0)), Matrix::identity(3));
}

TEST(Logits, HandValue) {
  // dot 0.5, exp(tau) = 2, b = -1
  Matrix a = Matrix::from_rows({{1.0, 0.0}});
  Matrix b = Matrix::from_rows({{0.5, std::sqrt(0.75)}});
  EXPECT_NEAR(scl_logits(a, b, scalars(std::log(2.0), -1.0))(0, 0), 0.0, 1e-15);
}

TEST(Logits, BiasShiftsEveryEntry) {
  Rng rng(1);
  Matrix a = random_unit_rows(rng, 3, 4);
  Matrix b = random_unit_rows(rng, 3, 4);
  Matrix l0 = scl_logits(a, b, scalars(0.3, 0.0));
  Matrix l1 = scl_logits(a, b, scalars(0.3, 1.75));
  for (std::size_t k = 0; k < l0.size(); ++k) EXPECT_NEAR(l1.values()[k] - l0.values()[k], 1.75, 1e-14);
}

TEST(Logits, ShapeMismatch) {
  EXPECT_ERROR_KIND(ShapeMismatch, scl_logits(Matrix(2, 3, 1.0), Matrix(2, 4, 1.0), ScalarsTauB{}));
}

TEST(Logits, TemperatureIsClamped) {
  EXPECT_EQ(scalars(25.0, 0.0).clamped_tau(), 10.0);
  EXPECT_EQ(scalars(-25.0, 0.0).clamped_tau(), -10.0);
  EXPECT_TRUE(std::isfinite(scalars(1e6, 0.0).scale()));
  ScalarsTauB d;
  EXPECT_NEAR(d.tau, std::log(10.0), 1e-15);
  EXPECT_EQ(d.b, -10.0);
}

TEST(SigmoidLoss, SingleZeroLogitIsLn2) {
  EXPECT_NEAR(sigmoid_contrastive_loss(Matrix(1, 1, 0.0)), std::log(2.0), 1e-12);
}

TEST(SigmoidLoss, SingleUnitLogit) {
  double v = sigmoid_contrastive_loss(Matrix(1, 1, 1.0));
  EXPECT_NEAR(v, static_cast<double>(nls(1.0L)), 1e-15);
  EXPECT_NEAR(v, 0.313262, 1e-6);
}

TEST(SigmoidLoss, TwoByTwoHandCase) {
  Matrix z = Matrix::identity(2);
  Matrix logits = scl_logits(z, z, scalars(0.0, 0.0));
  long double brute = 0.0L;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      long double w = i == j ? 1.0L : -1.0L;
      brute += nls(w * logits(i, j));
    }
  }
  brute /= 4.0L;
  double v = sigmoid_contrastive_loss(logits, pair_labels(2));
  EXPECT_NEAR(v, static_cast<double>(brute), 1e-15);
  EXPECT_NEAR(v, 0.503204, 1e-6);
}

TEST(SigmoidLoss, PairLabels) {
  Matrix w = pair_labels(4);
  int positives = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(w(i, j), i == j ? 1.0 : -1.0);
      positives += w(i, j) > 0;
    }
  }
  EXPECT_EQ(positives, 4);
}

TEST(SigmoidLoss, NonNegativeAndLn2AtZero) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::size_t n = random_size(rng, 1, 8);
    Matrix l = random_matrix(rng, n, n, 20.0);
    EXPECT_GE(sigmoid_contrastive_loss(l), 0.0);
    EXPECT_NEAR(sigmoid_contrastive_loss(Matrix(n, n, 0.0)), std::log(2.0), 1e-12);
  }
}

TEST(Regularizer, IdentityIsZero) {
  Rng rng(3);
  Matrix img = random_unit_rows(rng, 5, 6);
  EXPECT_EQ(similarity_regularizer(img, img), 0.0);
}

TEST(Regularizer, OppositePairHasZeroWeight) {
  Matrix s = Matrix::from_rows({{1.0, -1.0}, {-1.0, 1.0}});
  Matrix w = similarity_weights(s);
  EXPECT_EQ(w(0, 1), 0.0);
  EXPECT_EQ(w(0, 0), 1.0);
  // Whatever z does with the opposite pair, it costs nothing.
  Matrix img = Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}});
  Matrix z = Matrix::from_rows({{0.0, 1.0}, {0.0, 1.0}});
  EXPECT_EQ(similarity_regularizer(img, Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}})), 0.0);
  // Diagonal terms are 0 and the off-diagonal weight is 0.
  EXPECT_NEAR(similarity_regularizer(img, z), 0.0, 1e-15);
}

TEST(Regularizer, CollapsedPairHandCase) {
  Matrix img = Matrix::identity(2);
  Matrix z = Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});
  // Four terms: diagonals 0, off-diagonals 0.25 * (0 - 1)^2 each.
  double oracle = (0.0 + 0.25 + 0.25 + 0.0) / 4.0;
  EXPECT_NEAR(similarity_regularizer(img, z), oracle, 1e-12);
  EXPECT_NEAR(similarity_regularizer(img, z), 0.125, 1e-12);
}

TEST(Regularizer, RejectsUnnormalizedRows) {
  Matrix img = Matrix::identity(2);
  Matrix z = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.001}});
  EXPECT_ERROR_KIND(NotNormalized, similarity_regularizer(img, z));
  EXPECT_ERROR_KIND(NotNormalized, similarity_regularizer(scaled(img, 2.0), img));
}

TEST(Regularizer, WeightsInUnitIntervalAndNonNegative) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    std::size_t n = random_size(rng, 1, 8);
    std::size_t d = random_size(rng, 1, 8);
    Matrix img = random_unit_rows(rng, n, d);
    Matrix z = random_unit_rows(rng, n, d);
    Matrix w = similarity_weights(gram(img, img));
    for (double v : w.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-15);
    }
    EXPECT_GE(similarity_regularizer(img, z), 0.0);
  }
}

TEST(CombinedLoss, LambdaZeroIsExactlyContrastive) {
  Rng rng(5);
  Matrix img = random_unit_rows(rng, 4, 6);
  Matrix zi = random_unit_rows(rng, 4, 6);
  Matrix zt = random_unit_rows(rng, 4, 6);
  ScalarsTauB s = scalars(0.7, -2.0);
  EXPECT_EQ(botaclip_loss(img, zi, zt, s, 0.0), sigmoid_contrastive_loss(scl_logits(zi, zt, s)));
}

TEST(CombinedLoss, Additivity) {
  Rng rng(6);
  Matrix img = random_unit_rows(rng, 4, 6);
  Matrix zi = random_unit_rows(rng, 4, 6);
  Matrix zt = random_unit_rows(rng, 4, 6);
  ScalarsTauB s = scalars(0.2, -1.0);
  double scl = sigmoid_contrastive_loss(scl_logits(zi, zt, s));
  double r = similarity_regularizer(img, zi);
  EXPECT_NEAR(botaclip_loss(img, zi, zt, s, 1.0), scl + r, 1e-15);
  EXPECT_NEAR(botaclip_loss(img, zi, zt, s, 3.5), scl + 3.5 * r, 1e-14);
  BotaclipObjective obj;
  EXPECT_EQ(obj.lambda(), 1.0);
  LossBreakdown lb = obj.forward(img, zi, zt, s);
  EXPECT_NEAR(lb.total, lb.scl + lb.reg, 1e-15);
}

TEST(CombinedLoss, LambdaZeroStillReportsRegularizer) {
  Matrix img = Matrix::identity(2);
  Matrix z = Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});
  BotaclipObjective obj(0.0);
  LossBreakdown lb = obj.forward(img, z, z, ScalarsTauB{});
  EXPECT_NEAR(lb.reg, 0.125, 1e-12);
  EXPECT_EQ(lb.total, lb.scl);
}

TEST(CombinedLoss, PermutationInvariant) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    std::size_t n = random_size(rng, 2, 8);
    Matrix img = random_unit_rows(rng, n, 5);
    Matrix zi = random_unit_rows(rng, n, 5);
    Matrix zt = random_unit_rows(rng, n, 5);
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    rng.shuffle(std::span<std::size_t>(p));
    ScalarsTauB s = scalars(rng.normal(), rng.normal());
    double base = botaclip_loss(img, zi, zt, s, 1.0);
    double perm = botaclip_loss(permute_rows(img, p), permute_rows(zi, p), permute_rows(zt, p), s, 1.0);
    EXPECT_NEAR(base, perm, 1e-13);
    EXPECT_NEAR(similarity_regularizer(img, zi), similarity_regularizer(permute_rows(img, p), permute_rows(zi, p)),
                1e-14);
  }
}

TEST(CrossEntropy, UniformLogits) {
  Vector l(232, 0.37);
  EXPECT_NEAR(cross_entropy(l, 17), std::log(232.0), 1e-12);
  EXPECT_NEAR(cross_entropy(l, 17), 5.44674, 1e-5);
}

TEST(CrossEntropy, Saturated) {
  Vector l(5, 0.0);
  l[2] = 1e3;
  EXPECT_NEAR(cross_entropy(l, 2), 0.0, 1e-12);
}

TEST(CrossEntropy, HandValue) {
  long double oracle = -std::log(std::exp(1.0L) / (std::exp(1.0L) + 1.0L));
  EXPECT_NEAR(cross_entropy(Vector{1.0, 0.0}, 0), static_cast<double>(oracle), 1e-15);
  EXPECT_NEAR(cross_entropy(Vector{1.0, 0.0}, 0), 0.313262, 1e-6);
}

TEST(CrossEntropy, BadLabel) { EXPECT_ERROR_KIND(BadLabel, cross_entropy(Vector{1.0, 0.0}, 2)); }

TEST(BotaspLoss, ZeroLogitsZeroTargets) {
  Rng rng(8);
  Matrix z = random_unit_rows(rng, 3, 4);
  EXPECT_NEAR(botasp_loss(Matrix(3, 5), Matrix(3, 5), z, z, 0.0), std::log(2.0), 1e-15);
}

TEST(BotaspLoss, IdenticalEmbeddingsHaveNoRegularizer) {
  Rng rng(9);
  Matrix z = random_unit_rows(rng, 3, 4);
  Matrix logits = random_matrix(rng, 3, 5);
  Matrix y(3, 5);
  y(0, 1) = y(2, 4) = 1.0;
  EXPECT_EQ(botasp_loss(logits, y, z, z, 100.0), botasp_loss(logits, y, z, z, 0.0));
}

TEST(BotaspLoss, DefaultLambdaIsHundred) {
  Rng rng(10);
  Matrix z0 = random_unit_rows(rng, 3, 4);
  Matrix z1 = random_unit_rows(rng, 3, 4);
  Matrix logits = random_matrix(rng, 3, 2);
  Matrix y(3, 2, 1.0);
  EXPECT_EQ(botasp_loss(logits, y, z0, z1), botasp_loss(logits, y, z0, z1, 100.0));
  double bce = botasp_loss(logits, y, z0, z1, 0.0);
  double reg = (botasp_loss(logits, y, z0, z1, 1.0) - bce);
  EXPECT_NEAR(reg, similarity_regularizer(z0, z1), 1e-14);
}

TEST(BotaspLoss, ShapeMismatch) {
  Rng rng(11);
  Matrix z = random_unit_rows(rng, 3, 4);
  EXPECT_ERROR_KIND(ShapeMismatch, botasp_loss(Matrix(3, 5), Matrix(3, 4), z, z));
}

TEST(LossGradients, BiasDerivativeSingleZeroLogit) {
  // l = dot * exp(0) + b = 1 - 1 = 0, d/db -log sigma(l) = -sigma(-l) = -0.5
  Matrix z = Matrix::from_rows({{1.0, 0.0}});
  BotaclipObjective obj(0.0);
  obj.forward(z, z, z, scalars(0.0, -1.0));
  EXPECT_NEAR(obj.backward().b, -0.5, 1e-15);
}

TEST(LossGradients, RegularizerGradientVanishesAtOriginal) {
  Rng rng(12);
  Matrix img = random_unit_rows(rng, 4, 5);
  Matrix zt = random_unit_rows(rng, 4, 5);
  BotaclipObjective with(1.0);
  BotaclipObjective without(0.0);
  with.forward(img, img, zt, ScalarsTauB{});
  without.forward(img, img, zt, ScalarsTauB{});
  EXPECT_LE(max_abs_diff(with.backward().z_img, without.backward().z_img), 1e-15);
}

TEST(LossGradients, BackwardWithoutForward) {
  BotaclipObjective obj;
  EXPECT_ERROR_KIND(MissingForwardCache, obj.backward());
  BotaspObjective sp;
  EXPECT_ERROR_KIND(MissingForwardCache, sp.backward());
}

TEST(LossGradients, CombinedObjectiveFullChain) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(1000 + seed);
    std::size_t n = random_size(rng, 1, 4);
    std::size_t d = random_size(rng, 2, 8);
    Matrix img = random_unit_rows(rng, n, d);
    Matrix u_img = random_matrix(rng, n, d);  // pre-normalization image projection
    Matrix z_tab = random_unit_rows(rng, n, d);
    double lambda = seed % 3 == 0 ? 0.0 : 0.5 + rng.uniform();
    ScalarsTauB s = scalars(0.5 * rng.normal(), rng.normal());

    BotaclipObjective obj(lambda);
    Matrix z_img = l2_normalize_rows(u_img);
    obj.forward(img, z_img, z_tab, s);
    auto g = obj.backward();
    Matrix du = l2_normalize_rows_backward(z_img, row_norms(u_img), g.z_img);

    auto through_norm = [&](const Matrix& u) {
      BotaclipObjective o(lambda);
      return o.forward(img, l2_normalize_rows(u), z_tab, s).total;
    };
    EXPECT_LT(check_input_gradient(u_img, du, through_norm), kGradTol) << "seed " << seed;

    auto wrt_tab = [&](const Matrix& zt) {
      BotaclipObjective o(lambda);
      return o.forward(img, z_img, zt, s).total;
    };
    EXPECT_LT(check_input_gradient(z_tab, g.z_tab, wrt_tab), kGradTol) << "seed " << seed;

    // Raw z_img without the normalization step; the step stays inside the
    // unit-norm tolerance of the regularizer.
    auto wrt_img = [&](const Matrix& zi) {
      BotaclipObjective o(lambda);
      return o.forward(img, zi, z_tab, s).total;
    };
    EXPECT_LT(check_input_gradient(z_img, g.z_img, wrt_img, 1e-7), kGradTol) << "seed " << seed;

    auto wrt_tau = [&](double v) {
      BotaclipObjective o(lambda);
      return o.forward(img, z_img, z_tab, scalars(v, s.b)).total;
    };
    auto wrt_b = [&](double v) {
      BotaclipObjective o(lambda);
      return o.forward(img, z_img, z_tab, scalars(s.tau, v)).total;
    };
    Vector num{central_difference(wrt_tau, s.tau, kFdStep), central_difference(wrt_b, s.b, kFdStep)};
    EXPECT_LT(relative_error(g.tau, num[0]), kGradTol) << "seed " << seed;
    EXPECT_LT(relative_error(g.b, num[1]), kGradTol) << "seed " << seed;
  }
}

TEST(LossGradients, ContrastiveLossWrtLogits) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(2000 + seed);
    std::size_t n = random_size(rng, 1, 4);
    std::size_t d = random_size(rng, 2, 8);
    Matrix zi = random_unit_rows(rng, n, d);
    Matrix zt = random_unit_rows(rng, n, d);
    ScalarsTauB s = scalars(rng.normal(), rng.normal());
    BotaclipObjective obj(0.0);
    obj.forward(zi, zi, zt, s);
    auto g = obj.backward();
    // dL/dz_tab through the logits matches differences of the plain loss.
    auto plain = [&](const Matrix& t) { return sigmoid_contrastive_loss(scl_logits(zi, t, s)); };
    EXPECT_LT(check_input_gradient(zt, g.z_tab, plain), kGradTol) << "seed " << seed;
  }
}

TEST(LossGradients, CrossEntropyBatch) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(3000 + seed);
    std::size_t n = random_size(rng, 1, 4);
    std::size_t k = random_size(rng, 2, 8);
    Matrix logits = random_matrix(rng, n, k, 3.0);
    std::vector<std::size_t> labels(n);
    for (auto& y : labels) y = rng.uniform_index(k);
    CrossEntropyResult r = cross_entropy_batch(logits, labels);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += cross_entropy(logits.row(i), labels[i]);
    EXPECT_NEAR(r.loss, mean / static_cast<double>(n), 1e-14);
    auto f = [&](const Matrix& l) { return cross_entropy_batch(l, labels).loss; };
    EXPECT_LT(check_input_gradient(logits, r.d_logits, f), kGradTol) << "seed " << seed;
  }
}

TEST(LossGradients, BotaspObjective) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(4000 + seed);
    std::size_t n = random_size(rng, 1, 4);
    std::size_t s = random_size(rng, 1, 8);
    std::size_t d = random_size(rng, 2, 8);
    Matrix logits = random_matrix(rng, n, s, 2.0);
    Matrix y(n, s);
    for (double& v : y.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
    Matrix z0 = random_unit_rows(rng, n, d);
    Matrix u = random_matrix(rng, n, d);
    double lambda = seed % 2 ? 100.0 : 0.3;
    BotaspObjective obj(lambda);
    Matrix z1 = l2_normalize_rows(u);
    LossBreakdown lb = obj.forward(logits, y, z0, z1);
    EXPECT_NEAR(lb.total, botasp_loss(logits, y, z0, z1, lambda), 1e-12);
    auto g = obj.backward();
    auto wrt_logits = [&](const Matrix& l) { return botasp_loss(l, y, z0, z1, lambda); };
    EXPECT_LT(check_input_gradient(logits, g.logits, wrt_logits), kGradTol) << "seed " << seed;
    Matrix du = l2_normalize_rows_backward(z1, row_norms(u), g.z_new);
    auto wrt_u = [&](const Matrix& uu) { return botasp_loss(logits, y, z0, l2_normalize_rows(uu), lambda); };
    EXPECT_LT(check_input_gradient(u, du, wrt_u), kGradTol) << "seed " << seed;
  }
}
