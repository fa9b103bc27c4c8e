#include "botaclip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "botaclip/error.hpp"

namespace botaclip {

ConfusionCounts confusion_counts(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::ShapeMismatch, "confusion_counts: length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      predicted[i] ? ++c.tp : ++c.fn;
    } else {
      predicted[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

std::vector<int> threshold_predictions(std::span<const double> probability, double threshold) {
  std::vector<int> out(probability.size());
  for (std::size_t i = 0; i < probability.size(); ++i) out[i] = probability[i] >= threshold ? 1 : 0;
  return out;
}

ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) throw Error(ErrorKind::UndefinedMetric, "sensitivity: no positives");
  if (c.tn + c.fp == 0) throw Error(ErrorKind::UndefinedMetric, "specificity: no negatives");
  ClassificationMetrics m;
  m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  m.tss = m.sensitivity + m.specificity - 1.0;
  m.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return m;
}

double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "mae: inputs must be non-empty and of equal length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

Vector average_ranks(std::span<const double> values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  Vector ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorKind::ShapeMismatch, "pearson: need two equal-length vectors of size >= 2");
  }
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorKind::ZeroVariance, "correlation of a constant vector");
  return sab / std::sqrt(saa * sbb);
}

double spearman_rho(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.size() < 2) {
    throw Error(ErrorKind::ShapeMismatch, "spearman_rho: need two equal-length vectors of size >= 2");
  }
  Vector ry = average_ranks(y);
  Vector rh = average_ranks(yhat);
  return pearson(ry, rh);
}

BoyceCurve boyce_curve(std::span<const double> presence, std::span<const double> background,
                       const BoyceConfig& cfg) {
  if (presence.empty() || background.empty()) {
    throw Error(ErrorKind::EmptyData, "boyce: presence and background must be non-empty");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto span : {presence, background}) {
    for (double v : span) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "boyce: non-finite suitability");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // Windows live on u = (v - lo) / (hi - lo) so the end windows reach 0 and
  // 1 exactly and an affine change of units leaves every count unchanged.
  double range = hi - lo;
  if (!(range > 0.0)) throw Error(ErrorKind::Degenerate, "boyce: suitability range is empty");
  auto unit = [&](std::span<const double> s) {
    Vector u(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) u[i] = (s[i] - lo) / range;
    return u;
  };
  Vector up = unit(presence);
  Vector ub = unit(background);
  double width = cfg.width_fraction;
  double np = static_cast<double>(presence.size());
  double nb = static_cast<double>(background.size());
  std::size_t windows = std::max<std::size_t>(cfg.windows, 2);
  double span = 1.0 - width;
  double last = static_cast<double>(windows - 1);

  BoyceCurve curve;
  for (std::size_t w = 0; w < windows; ++w) {
    double a = span * static_cast<double>(w) / last;
    double b = 1.0 - span * static_cast<double>(windows - 1 - w) / last;
    auto count = [&](const Vector& s) {
      return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= a && v <= b; }));
    };
    double bg = count(ub);
    if (bg == 0.0) continue;
    curve.centers.push_back(lo + 0.5 * (a + b) * range);
    curve.ratios.push_back((count(up) / np) / (bg / nb));
  }
  return curve;
}

double boyce_index(std::span<const double> presence, std::span<const double> background,
                   const BoyceConfig& cfg) {
  BoyceCurve curve = boyce_curve(presence, background, cfg);
  if (curve.ratios.size() < 3) {
    throw Error(ErrorKind::Degenerate, "boyce: fewer than 3 windows with background");
  }
  Vector f;
  Vector centers;
  for (std::size_t i = 0; i < curve.ratios.size(); ++i) {
    if (cfg.collapse_duplicates && i + 1 < curve.ratios.size() &&
        std::abs(curve.ratios[i] - curve.ratios[i + 1]) <=
            1e-12 * std::max(1.0, std::abs(curve.ratios[i]))) {
      continue;
    }
    f.push_back(curve.ratios[i]);
    centers.push_back(curve.centers[i]);
  }
  if (f.size() < 2 || std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); })) {
    throw Error(ErrorKind::ZeroVariance, "boyce: predicted-to-expected ratio is constant");
  }
  return spearman_rho(f, centers);
}

ClusterIndices cluster_indices(const Matrix& x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw Error(ErrorKind::ShapeMismatch, "cluster_indices: label count");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::size_t k = members.size();
  std::size_t n = x.rows();
  std::size_t d = x.cols();
  if (k < 2 || n <= k) {
    throw Error(ErrorKind::DegenerateCluster, "cluster_indices: need >= 2 clusters and n > k");
  }

  Vector overall(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) overall[c] += x(i, c);
  }
  for (double& v : overall) v /= static_cast<double>(n);

  std::vector<Vector> centroids;
  Vector spread;  // mean distance to centroid
  double within = 0.0;
  double between = 0.0;
  for (const auto& [label, idx] : members) {
    Vector c(d, 0.0);
    for (std::size_t i : idx) {
      for (std::size_t j = 0; j < d; ++j) c[j] += x(i, j);
    }
    for (double& v : c) v /= static_cast<double>(idx.size());
    double dist_sum = 0.0;
    for (std::size_t i : idx) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) sq += (x(i, j) - c[j]) * (x(i, j) - c[j]);
      within += sq;
      dist_sum += std::sqrt(sq);
    }
    double sep = 0.0;
    for (std::size_t j = 0; j < d; ++j) sep += (c[j] - overall[j]) * (c[j] - overall[j]);
    between += static_cast<double>(idx.size()) * sep;
    spread.push_back(dist_sum / static_cast<double>(idx.size()));
    centroids.push_back(std::move(c));
  }

  double db = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double worst = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) sq += (centroids[a][j] - centroids[b][j]) * (centroids[a][j] - centroids[b][j]);
      if (sq == 0.0) throw Error(ErrorKind::DegenerateCluster, "two clusters share a centroid");
      worst = std::max(worst, (spread[a] + spread[b]) / std::sqrt(sq));
    }
    db += worst;
  }
  ClusterIndices out;
  out.davies_bouldin = db / static_cast<double>(k);
  double dk = static_cast<double>(k);
  double dn = static_cast<double>(n);
  out.calinski_harabasz = within == 0.0 ? std::numeric_limits<double>::infinity()
                                        : (between / (dk - 1.0)) / (within / (dn - dk));
  return out;
}

}  // namespace botaclip
