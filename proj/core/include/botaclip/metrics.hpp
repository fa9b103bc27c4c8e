#pragma once

#include <cstddef>
#include <span>

#include "botaclip/numerics.hpp"

namespace botaclip {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

// truth/predicted are 0/1.
ConfusionCounts confusion_counts(std::span<const int> truth, std::span<const int> predicted);

// predicted = probability >= threshold
std::vector<int> threshold_predictions(std::span<const double> probability, double threshold = 0.5);

struct ClassificationMetrics {
  double tss = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// sens = tp/(tp+fn), spec = tn/(tn+fp), tss = sens + spec - 1,
// f1 = 2tp/(2tp+fp+fn). Throws UndefinedMetric when a denominator is 0.
ClassificationMetrics classification_metrics(const ConfusionCounts& c);

double mae(std::span<const double> y, std::span<const double> yhat);

// 1-based ranks with ties replaced by their average rank.
Vector average_ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average-tie ranks. Throws ZeroVariance if either
// rank vector is constant.
double spearman_rho(std::span<const double> y, std::span<const double> yhat);

struct BoyceConfig {
  std::size_t windows = 100;
  double width_fraction = 0.1;  // window width as a fraction of the pooled range
  bool collapse_duplicates = true;
};

struct BoyceCurve {
  Vector centers;  // retained windows
  Vector ratios;   // predicted-to-expected ratio F per retained window
};

// Moving-window P/E ratios over the pooled suitability range; windows with
// no background are dropped. Window k of W spans [k s, k s + width] on the
// range rescaled to [0, 1], s = (1 - width) / (W - 1). Throws Degenerate when
// every value is equal.
BoyceCurve boyce_curve(std::span<const double> presence, std::span<const double> background,
                       const BoyceConfig& cfg = {});

// Continuous Boyce index: Spearman correlation between F and the window
// centre. Consecutive repeated F values are collapsed first (the usual
// ecospat behaviour). Throws Degenerate with fewer than 3 retained windows,
// ZeroVariance when all retained F are equal.
double boyce_index(std::span<const double> presence, std::span<const double> background,
                   const BoyceConfig& cfg = {});

struct ClusterIndices {
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
};

// Throws DegenerateCluster when fewer than 2 clusters, n <= k, or two
// centroids coincide.
ClusterIndices cluster_indices(const Matrix& x, std::span<const int> labels);

}  // namespace botaclip
