#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "botaclip/numerics.hpp"

namespace botaclip {

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
};

// Regularized upper incomplete gamma Q(a, x): series below x = a + 1,
// continued fraction above.
double regularized_gamma_q(double a, double x);

// Survival function of the chi-squared distribution.
double chi_squared_sf(double x, double df);

// scores: N subjects (rows) x k models (columns). Ranks within each row use
// average ties; no tie correction is applied to the statistic.
StatResult friedman_test(const Matrix& scores);

// Paired two-sided test on a - b. Zero differences are dropped; statistic is
// min(W+, W-). Exact enumeration up to 12 non-zero differences, normal
// approximation with tie and continuity correction beyond. Throws
// AllZeroDifferences.
StatResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kWilcoxonExactLimit = 12;

// Holm step-down adjusted p-values, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct Comparison {
  std::string name;  // "best vs other"
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  double adjusted_p = 1.0;
  double median_diff = 0.0;  // median over units of (best - other)
  double pct_change = 0.0;   // 100 * median_diff / |median(other)|
};

struct AblationReport {
  std::vector<std::string> models;
  Vector means;
  std::size_t best = 0;
  bool higher_is_better = true;
  double alpha = 0.05;
  StatResult friedman;
  bool winner_declared = false;  // Friedman p < alpha
  std::vector<Comparison> comparisons;
};

// scores: units (species or groups) x models.
AblationReport ablation_report(const std::vector<std::string>& models, const Matrix& scores,
                               bool higher_is_better = true, double alpha = 0.05);

void write_report_csv(std::ostream& out, const AblationReport& report);
void write_report_table(std::ostream& out, const AblationReport& report);

double median(std::span<const double> values);

}  // namespace botaclip
