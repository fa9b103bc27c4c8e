#include "botaclip/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "botaclip/error.hpp"
#include "botaclip/io.hpp"
#include "botaclip/metrics.hpp"

namespace botaclip {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz evaluation of the continued fraction for Q.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::BadConfig, "gamma_q: need a > 0, finite x");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_squared_sf(double x, double df) { return regularized_gamma_q(0.5 * df, 0.5 * x); }

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyData, "median of an empty vector");
  Vector v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

StatResult friedman_test(const Matrix& scores) {
  std::size_t n = scores.rows();
  std::size_t k = scores.cols();
  if (n < 2 || k < 2) throw Error(ErrorKind::ShapeMismatch, "friedman: need >= 2 subjects and >= 2 models");
  Vector rank_sums(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Vector r = average_ranks(scores.row(i));
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += r[j];
  }
  double dn = static_cast<double>(n);
  double dk = static_cast<double>(k);
  double sq = 0.0;
  for (double r : rank_sums) sq += r * r;
  double chi2 = 12.0 / (dn * dk * (dk + 1.0)) * sq - 3.0 * dn * (dk + 1.0);
  // Exact ties make the two terms cancel; avoid reporting -1e-15.
  if (std::abs(chi2) < 1e-9 * 3.0 * dn * (dk + 1.0)) chi2 = 0.0;
  StatResult out;
  out.statistic = chi2;
  out.p_value = chi_squared_sf(chi2, dk - 1.0);
  out.method = "friedman-chi2";
  return out;
}

StatResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "wilcoxon: length mismatch");
  Vector d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    if (!std::isfinite(diff)) throw Error(ErrorKind::NonFinite, "wilcoxon: non-finite input");
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw Error(ErrorKind::AllZeroDifferences, "wilcoxon: all differences are zero");
  std::size_t n = d.size();
  Vector magnitude(n);
  for (std::size_t i = 0; i < n; ++i) magnitude[i] = std::abs(d[i]);
  Vector ranks = average_ranks(magnitude);

  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0.0 ? w_plus : w_minus) += ranks[i];

  StatResult out;
  out.statistic = std::min(w_plus, w_minus);
  double dn = static_cast<double>(n);
  double mean = dn * (dn + 1.0) / 4.0;

  if (n <= kWilcoxonExactLimit) {
    // Average ranks are multiples of 1/2, so doubled ranks are exact integers.
    std::vector<long> twice(n);
    for (std::size_t i = 0; i < n; ++i) twice[i] = std::lround(2.0 * ranks[i]);
    long total = std::accumulate(twice.begin(), twice.end(), 0L);
    long observed = std::labs(std::lround(2.0 * w_plus) * 2 - total);
    std::size_t patterns = std::size_t{1} << n;
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      long s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) s += twice[i];
      }
      if (std::labs(2 * s - total) >= observed) ++extreme;
    }
    out.p_value = static_cast<double>(extreme) / static_cast<double>(patterns);
    out.method = "exact";
    return out;
  }

  double tie_term = 0.0;
  Vector sorted = magnitude;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  out.method = "normal-approx";
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  out.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  return out;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::BadConfig, "holm: p-values must lie in [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double v = std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
    running = std::max(running, v);
    adjusted[order[j]] = running;
  }
  return adjusted;
}

AblationReport ablation_report(const std::vector<std::string>& models, const Matrix& scores,
                               bool higher_is_better, double alpha) {
  if (models.size() < 2) throw Error(ErrorKind::BadConfig, "ablation_report: need >= 2 models");
  if (scores.cols() != models.size()) {
    throw Error(ErrorKind::ShapeMismatch, "ablation_report: one score column per model");
  }
  AblationReport report;
  report.models = models;
  report.higher_is_better = higher_is_better;
  report.alpha = alpha;
  std::size_t units = scores.rows();
  std::size_t k = models.size();
  report.means.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < units; ++i) report.means[j] += scores(i, j);
    report.means[j] /= static_cast<double>(std::max<std::size_t>(units, 1));
  }
  report.best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    bool better = higher_is_better ? report.means[j] > report.means[report.best]
                                   : report.means[j] < report.means[report.best];
    if (better) report.best = j;
  }
  report.friedman = friedman_test(scores);
  report.winner_declared = report.friedman.p_value < alpha;

  std::vector<double> raw;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == report.best) continue;
    Vector best_col(units);
    Vector other(units);
    Vector diff(units);
    for (std::size_t i = 0; i < units; ++i) {
      best_col[i] = scores(i, report.best);
      other[i] = scores(i, j);
      diff[i] = best_col[i] - other[i];
    }
    Comparison c;
    c.name = models[report.best] + " vs " + models[j];
    try {
      StatResult w = wilcoxon_signed_rank(best_col, other);
      c.statistic = w.statistic;
      c.p_value = w.p_value;
      c.method = w.method;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AllZeroDifferences) throw;
      c.statistic = 0.0;
      c.p_value = 1.0;
      c.method = "all-zero";
    }
    c.median_diff = median(diff);
    double base = std::abs(median(other));
    c.pct_change = base > 0.0 ? 100.0 * c.median_diff / base : std::numeric_limits<double>::quiet_NaN();
    raw.push_back(c.p_value);
    report.comparisons.push_back(std::move(c));
  }
  std::vector<double> adjusted = holm_adjust(raw);
  for (std::size_t i = 0; i < adjusted.size(); ++i) report.comparisons[i].adjusted_p = adjusted[i];
  return report;
}

void write_report_csv(std::ostream& out, const AblationReport& report) {
  out << "comparison,method,statistic,p_value,adjusted_p,median_diff,pct_change\n";
  out << "friedman (" << report.models.size() << " models)," << report.friedman.method << ','
      << format_double(report.friedman.statistic) << ',' << format_double(report.friedman.p_value)
      << ",,,\n";
  for (const Comparison& c : report.comparisons) {
    out << c.name << ',' << c.method << ',' << format_double(c.statistic) << ','
        << format_double(c.p_value) << ',' << format_double(c.adjusted_p) << ','
        << format_double(c.median_diff) << ',' << format_double(c.pct_change) << '\n';
  }
}

void write_report_table(std::ostream& out, const AblationReport& report) {
  out << "Friedman chi2 = " << std::setprecision(4) << report.friedman.statistic
      << ", p = " << report.friedman.p_value << " -> "
      << (report.winner_declared ? "best model: " + report.models[report.best] : std::string("no winner"))
      << '\n';
  out << std::left << std::setw(36) << "comparison" << std::setw(15) << "Wilcoxon stat"
      << std::setw(12) << "p" << std::setw(12) << "Holm p" << std::setw(14) << "Median diff"
      << "% change\n";
  for (const Comparison& c : report.comparisons) {
    out << std::left << std::setw(36) << c.name << std::setw(15) << c.statistic << std::setw(12)
        << c.p_value << std::setw(12) << c.adjusted_p << std::setw(14) << c.median_diff
        << c.pct_change << '\n';
  }
}

}  // namespace botaclip
