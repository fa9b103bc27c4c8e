#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "botaclip/numerics.hpp"

namespace botaclip {

enum class ForestTask { Classification, Regression };

// Mirrors the usual library defaults: 100 bootstrapped trees, unlimited
// depth, sqrt(d) candidate features per node for classification and all d
// for regression.
struct ForestConfig {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_features;
  bool bootstrap = true;
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // class-1 frequency or mean target
  std::size_t n_samples = 0;
  double impurity = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
};

struct Forest {
  ForestTask task = ForestTask::Classification;
  std::size_t n_features = 0;
  std::vector<Tree> trees;
};

// CART trees with gini splits on bootstrap samples. y must be 0/1. Split
// ties go to the lowest feature index, then the lowest threshold; thresholds
// are midpoints between consecutive distinct values and x <= threshold goes
// left.
Forest fit_classifier(const Matrix& x, std::span<const int> y, const ForestConfig& cfg = {});

// Mean over trees of the leaf class-1 frequency.
Vector predict_proba(const Forest& forest, const Matrix& x);

// Variance-reduction trees; leaves hold the mean target.
Forest fit_regressor(const Matrix& x, std::span<const double> y, const ForestConfig& cfg = {});

Vector predict(const Forest& forest, const Matrix& x);

double gini_impurity(double positives, double total);

}  // namespace botaclip
