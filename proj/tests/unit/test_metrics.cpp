#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "botaclip/metrics.hpp"
#include "testing.hpp"

using namespace botaclip;
using namespace botaclip::testing;

namespace {

// Rank-formula Spearman for vectors without ties.
double spearman_formula(const Vector& a, const Vector& b) {
  auto ranks = [](const Vector& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    Vector r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k + 1);
    return r;
  };
  Vector ra = ranks(a), rb = ranks(b);
  double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Vector grid(std::size_t n) {
  Vector v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

// Window-by-window P/E ratios, written against the rescaled range [0, 1].
Vector boyce_oracle_ratios(const Vector& pres, const Vector& bg) {
  double lo = std::min(*std::min_element(pres.begin(), pres.end()), *std::min_element(bg.begin(), bg.end()));
  double hi = std::max(*std::max_element(pres.begin(), pres.end()), *std::max_element(bg.begin(), bg.end()));
  auto inside = [&](double v, int k) {
    double u = (v - lo) / (hi - lo);
    double a = 0.9 * k / 99.0;
    double b = 1.0 - 0.9 * (99 - k) / 99.0;
    return u >= a && u <= b;
  };
  Vector out;
  for (int k = 0; k < 100; ++k) {
    double p = 0, b = 0;
    for (double v : pres) p += inside(v, k);
    for (double v : bg) b += inside(v, k);
    if (b > 0) out.push_back((p / static_cast<double>(pres.size())) / (b / static_cast<double>(bg.size())));
  }
  return out;
}

}  // namespace

TEST(Classification, Perfect) {
  ClassificationMetrics m = classification_metrics({5, 0, 5, 0});
  EXPECT_EQ(m.tss, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.sensitivity, 1.0);
  EXPECT_EQ(m.specificity, 1.0);
}

TEST(Classification, HandCounted) {
  ConfusionCounts c;
  c.tp = 8;
  c.fn = 2;
  c.tn = 6;
  c.fp = 4;
  ClassificationMetrics m = classification_metrics(c);
  EXPECT_DOUBLE_EQ(m.sensitivity, 0.8);
  EXPECT_DOUBLE_EQ(m.specificity, 0.6);
  EXPECT_NEAR(m.tss, 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(m.f1, 8.0 / 11.0);
}

TEST(Classification, Undefined) {
  EXPECT_ERROR_KIND(UndefinedMetric, classification_metrics({0, 3, 3, 0}));
  EXPECT_ERROR_KIND(UndefinedMetric, classification_metrics({3, 0, 0, 3}));
}

TEST(Classification, CoinFlipNearZero) {
  Rng rng(1);
  std::vector<int> truth, pred;
  for (int i = 0; i < 10000; ++i) {
    truth.push_back(i % 2);
    pred.push_back(rng.uniform() < 0.5);
  }
  EXPECT_LT(std::abs(classification_metrics(confusion_counts(truth, pred)).tss), 0.1);
}

TEST(Classification, BruteForceCounterOracle) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = random_size(rng, 4, 60);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = i < 2 ? static_cast<int>(i) : rng.uniform() < 0.5;
      pred[i] = rng.uniform() < 0.5;
    }
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] && pred[i]) ++tp;
      if (!truth[i] && pred[i]) ++fp;
      if (!truth[i] && !pred[i]) ++tn;
      if (truth[i] && !pred[i]) ++fn;
    }
    ConfusionCounts c = confusion_counts(truth, pred);
    EXPECT_EQ(c.tp, static_cast<std::size_t>(tp));
    EXPECT_EQ(c.fp, static_cast<std::size_t>(fp));
    ClassificationMetrics m = classification_metrics(c);
    double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
    double spec = static_cast<double>(tn) / static_cast<double>(tn + fp);
    EXPECT_EQ(m.sensitivity, sens);
    EXPECT_EQ(m.specificity, spec);
    EXPECT_EQ(m.tss, sens + spec - 1.0);
    if (tp + fp + fn > 0) EXPECT_EQ(m.f1, 2.0 * tp / static_cast<double>(2 * tp + fp + fn));
    // Swapping class roles leaves TSS unchanged.
    ClassificationMetrics swapped = classification_metrics({c.tn, c.fn, c.tp, c.fp});
    EXPECT_NEAR(swapped.tss, m.tss, 1e-15);
  }
}

TEST(Classification, Threshold) {
  std::vector<double> p{0.2, 0.5, 0.7};
  EXPECT_EQ(threshold_predictions(p), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(threshold_predictions(p, 0.6), (std::vector<int>{0, 0, 1}));
}

TEST(Regression, MaeAndSpearman) {
  Vector y{1, 2, 3, 4};
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_NEAR(spearman_rho(y, y), 1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(y, Vector{4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(y, Vector{1, 2, 4, 3}), 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(mae(y, Vector{2, 2, 2, 2}), 1.0);
  EXPECT_ERROR_KIND(ZeroVariance, spearman_rho(y, Vector{5, 5, 5, 5}));
}

TEST(Regression, SpearmanMatchesRankFormula) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = random_size(rng, 3, 40);
    Vector a = random_vector(rng, n), b = random_vector(rng, n);
    EXPECT_NEAR(spearman_rho(a, b), spearman_formula(a, b), 1e-12);
  }
}

TEST(Regression, AverageRanks) {
  EXPECT_EQ(average_ranks(Vector{10, 20, 20, 5}), (Vector{2, 3.5, 3.5, 1}));
}

TEST(Boyce, MonotoneHandCases) {
  Vector bg = grid(11);
  EXPECT_NEAR(boyce_index(Vector{0.8, 0.9, 1.0}, bg), 1.0, 1e-12);
  EXPECT_NEAR(boyce_index(Vector{0.0, 0.1, 0.2}, bg), -1.0, 1e-12);
}

TEST(Boyce, RatiosMatchWindowOracle) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    Vector bg = random_vector(rng, random_size(rng, 20, 200));
    Vector pres = random_vector(rng, random_size(rng, 5, 50), 0.3, 1.0);
    EXPECT_EQ(boyce_curve(pres, bg).ratios.size(), boyce_oracle_ratios(pres, bg).size());
    Vector got = boyce_curve(pres, bg).ratios;
    Vector want = boyce_oracle_ratios(pres, bg);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

// Presences resampled from the background carry no signal. A single draw
// still swings widely (neighbouring windows share most points), so the
// bound applies to the ten-seed average.
TEST(Boyce, RandomPresencesNearZero) {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Vector bg = random_vector(rng, 1000);
    Vector pres;
    for (int i = 0; i < 1000; ++i) pres.push_back(bg[rng.uniform_index(bg.size())]);
    double bi = boyce_index(pres, bg);
    EXPECT_LE(std::abs(bi), 1.0);
    sum += bi;
  }
  EXPECT_LT(std::abs(sum / 10.0), 0.3);
}

TEST(Boyce, AffineInvariance) {
  Rng rng(5);
  // Scores on a 1/1024 grid keep 3x + 7 exact, so equality is exact.
  auto dyadic = [&](std::size_t n, bool skew) {
    Vector v(n);
    for (double& x : v) x = std::floor(1024.0 * (skew ? std::sqrt(rng.uniform()) : rng.uniform())) / 1024.0;
    return v;
  };
  auto affine = [](Vector v, double a, double b) {
    for (double& x : v) x = a * x + b;
    return v;
  };
  for (int t = 0; t < 10; ++t) {
    Vector bg = dyadic(300, false);
    Vector pres = dyadic(80, true);
    double base = boyce_index(pres, bg);
    EXPECT_EQ(base, boyce_index(affine(pres, 3.0, 7.0), affine(bg, 3.0, 7.0)));
    EXPECT_GT(base, 0.0);
    // Arbitrary coefficients: equal up to window-edge rounding.
    EXPECT_NEAR(base, boyce_index(affine(pres, 0.37, -2.1), affine(bg, 0.37, -2.1)), 0.05);
  }
}

TEST(Boyce, MonotoneTransformCloseToOracle) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    Vector bg = random_vector(rng, 400);
    Vector pres;
    for (int i = 0; i < 100; ++i) pres.push_back(std::sqrt(rng.uniform()));
    auto cube = [](Vector v) {
      for (double& x : v) x = x * x * x;
      return v;
    };
    Vector r = boyce_oracle_ratios(cube(pres), cube(bg));
    Vector got = boyce_curve(cube(pres), cube(bg)).ratios;
    ASSERT_EQ(r.size(), got.size());
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(got[i], r[i], 1e-12);
    // Windows change with the scale, but the sign of the association does not.
    EXPECT_GT(boyce_index(cube(pres), cube(bg)), 0.0);
  }
}

TEST(Boyce, Errors) {
  EXPECT_ERROR_KIND(EmptyData, boyce_index(Vector{}, Vector{1.0}));
  EXPECT_ERROR_KIND(ZeroVariance, boyce_index(grid(11), grid(11)));
  EXPECT_ERROR_KIND(Degenerate, boyce_index(Vector{0.5}, Vector{0.5, 0.5}));
}

TEST(Cluster, TwoClusterHandCase) {
  Matrix x = Matrix::from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  std::vector<int> labels{0, 0, 1, 1};
  ClusterIndices c = cluster_indices(x, labels);
  EXPECT_NEAR(c.davies_bouldin, 0.1, 1e-9);
  EXPECT_NEAR(c.calinski_harabasz, 200.0, 1e-9);
}

TEST(Cluster, DegenerateCentroids) {
  Matrix x = Matrix::from_rows({{0, 0}, {0, 2}, {0, 1}, {0, 1}});
  std::vector<int> labels{0, 0, 1, 1};
  EXPECT_ERROR_KIND(DegenerateCluster, cluster_indices(x, labels));
  std::vector<int> one{0, 0, 0, 0};
  EXPECT_ERROR_KIND(DegenerateCluster, cluster_indices(x, one));
}

TEST(Cluster, DaviesBouldinFallsAsClustersSeparate) {
  double prev = INFINITY;
  for (double gap : {2.0, 4.0, 8.0, 16.0}) {
    Matrix x = Matrix::from_rows({{0, 0}, {0, 1}, {gap, 0}, {gap, 1}});
    double db = cluster_indices(x, std::vector<int>{0, 0, 1, 1}).davies_bouldin;
    EXPECT_LT(db, prev);
    prev = db;
  }
}
