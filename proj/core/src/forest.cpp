#include "botaclip/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

constexpr double kTieTolerance = 1e-12;

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double cost = 0.0;  // weighted child impurity, summed over samples
};

class TreeBuilder {
public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, std::span<const double> y,
              ForestTask task, std::size_t max_features, const ForestConfig& cfg, Rng rng)
      : columns_(columns),
        y_(y),
        task_(task),
        max_features_(max_features),
        cfg_(cfg),
        rng_(rng),
        features_(columns.size()) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::vector<std::size_t> samples) {
    samples_ = std::move(samples);
    tree_.nodes.clear();
    grow(0, samples_.size(), 0);
    return std::move(tree_);
  }

private:
  // Sum of per-sample impurity (n * impurity) for a node summary.
  double node_cost(double sum, double sumsq, double n) const {
    if (n <= 0.0) return 0.0;
    if (task_ == ForestTask::Classification) return 2.0 * sum * (n - sum) / n;
    return std::max(0.0, sumsq - sum * sum / n);
  }

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    double n = static_cast<double>(end - begin);
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      double v = y_[samples_[i]];
      sum += v;
      sumsq += v * v;
    }
    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    {
      TreeNode& node = tree_.nodes.back();
      node.n_samples = end - begin;
      node.value = sum / n;
      node.impurity = node_cost(sum, sumsq, n) / n;
    }
    double parent_cost = node_cost(sum, sumsq, n);
    bool can_split = (end - begin) >= std::max<std::size_t>(2, cfg_.min_samples_split) &&
                     parent_cost > 1e-14 * std::max(1.0, n) &&
                     (!cfg_.max_depth || depth < *cfg_.max_depth);
    if (!can_split) return id;

    std::optional<Split> split = find_split(begin, end);
    if (!split) return id;

    auto mid_it = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin),
        samples_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t s) { return columns_[split->feature][s] <= split->threshold; });
    auto mid = static_cast<std::size_t>(mid_it - samples_.begin());
    if (mid == begin || mid == end) return id;

    int left = grow(begin, mid, depth + 1);
    int right = grow(mid, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  std::optional<Split> find_split(std::size_t begin, std::size_t end) {
    std::size_t n = end - begin;
    std::optional<Split> best;
    std::size_t visited = 0;
    std::size_t d = features_.size();
    buffer_.resize(n);
    for (std::size_t k = 0; k < d && visited < max_features_; ++k) {
      std::size_t j = k + static_cast<std::size_t>(rng_.uniform_index(d - k));
      std::swap(features_[k], features_[j]);
      std::size_t f = features_[k];
      const auto& col = columns_[f];
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = samples_[begin + i];
        buffer_[i] = {col[s], y_[s]};
      }
      std::sort(buffer_.begin(), buffer_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (buffer_.front().first == buffer_.back().first) continue;  // constant here
      ++visited;

      double total_sum = 0.0;
      double total_sq = 0.0;
      for (const auto& [x, v] : buffer_) {
        total_sum += v;
        total_sq += v * v;
      }
      double left_sum = 0.0;
      double left_sq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += buffer_[i].second;
        left_sq += buffer_[i].second * buffer_[i].second;
        if (!(buffer_[i].first < buffer_[i + 1].first)) continue;
        double nl = static_cast<double>(i + 1);
        double nr = static_cast<double>(n - i - 1);
        double cost = node_cost(left_sum, left_sq, nl) +
                      node_cost(total_sum - left_sum, total_sq - left_sq, nr);
        double threshold = 0.5 * (buffer_[i].first + buffer_[i + 1].first);
        // Midpoint rounding can land on the upper value; keep the split real.
        if (!(threshold < buffer_[i + 1].first)) threshold = buffer_[i].first;
        if (!best || cost < best->cost - kTieTolerance ||
            (std::abs(cost - best->cost) <= kTieTolerance &&
             (f < best->feature || (f == best->feature && threshold < best->threshold)))) {
          best = Split{f, threshold, cost};
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  std::span<const double> y_;
  ForestTask task_;
  std::size_t max_features_;
  const ForestConfig& cfg_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> samples_;
  std::vector<std::pair<double, double>> buffer_;
  Tree tree_;
};

Forest fit_forest(const Matrix& x, std::span<const double> y, ForestTask task,
                  const ForestConfig& cfg) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::EmptyData, "forest: empty design matrix");
  if (y.size() != x.rows()) throw Error(ErrorKind::ShapeMismatch, "forest: target length");
  if (cfg.n_trees == 0) throw Error(ErrorKind::BadConfig, "forest: n_trees must be >= 1");
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "forest: non-finite target");
  }
  std::size_t d = x.cols();
  std::size_t max_features =
      cfg.max_features.value_or(task == ForestTask::Classification
                                    ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                                    : d);
  max_features = std::clamp<std::size_t>(max_features, 1, d);

  std::vector<std::vector<double>> columns(d, std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) columns[j][i] = row[j];
  }

  Forest forest;
  forest.task = task;
  forest.n_features = d;
  forest.trees.reserve(cfg.n_trees);
  Rng root(cfg.seed);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng tree_rng = root.substream("tree", t);
    std::vector<std::size_t> samples(x.rows());
    if (cfg.bootstrap) {
      Rng boot = tree_rng.substream("bootstrap");
      for (auto& s : samples) s = static_cast<std::size_t>(boot.uniform_index(x.rows()));
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    TreeBuilder builder(columns, y, task, max_features, cfg, tree_rng.substream("features"));
    forest.trees.push_back(builder.build(std::move(samples)));
  }
  return forest;
}

Vector average_trees(const Forest& forest, const Matrix& x) {
  if (x.cols() != forest.n_features) {
    throw Error(ErrorKind::ShapeMismatch, "forest: expected " + std::to_string(forest.n_features) +
                                              " features, got " + std::to_string(x.cols()));
  }
  Vector out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (const Tree& t : forest.trees) s += t.predict(x.row(i));
    out[i] = s / static_cast<double>(forest.trees.size());
  }
  return out;
}

}  // namespace

double gini_impurity(double positives, double total) {
  if (total <= 0.0) return 0.0;
  double p = positives / total;
  return 2.0 * p * (1.0 - p);
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.push_back({static_cast<std::size_t>(nodes[i].left), d + 1});
      stack.push_back({static_cast<std::size_t>(nodes[i].right), d + 1});
    }
  }
  return deepest;
}

Forest fit_classifier(const Matrix& x, std::span<const int> y, const ForestConfig& cfg) {
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw Error(ErrorKind::BadLabel, "classifier labels must be 0 or 1");
    target[i] = static_cast<double>(y[i]);
  }
  return fit_forest(x, target, ForestTask::Classification, cfg);
}

Vector predict_proba(const Forest& forest, const Matrix& x) { return average_trees(forest, x); }

Forest fit_regressor(const Matrix& x, std::span<const double> y, const ForestConfig& cfg) {
  return fit_forest(x, y, ForestTask::Regression, cfg);
}

Vector predict(const Forest& forest, const Matrix& x) { return average_trees(forest, x); }

}  // namespace botaclip
