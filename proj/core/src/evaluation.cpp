#include "botaclip/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs body(u) for u in [0, n) on up to `threads` workers. Results must be
// written to disjoint slots; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t u = 0; u < n; ++u) body(u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t u = next++; u < n; u = next++) {
        try {
          body(u);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// NaN when the metric is undefined for numeric reasons.
template <typename F>
double guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (!is_numeric(e.kind())) throw;
    return kNaN;
  }
}

// Indices split by label and downsampled so both classes have the size of
// the smaller one. Empty when either class is missing.
std::vector<std::size_t> balanced(std::span<const std::size_t> rows, std::span<const int> label, Rng& rng) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t r : rows) (label[r] ? pos : neg).push_back(r);
  if (pos.empty() || neg.empty()) return {};
  BalancedIndices b = pos.size() <= neg.size() ? balance_downsample(pos, neg, rng) : balance_downsample(neg, pos, rng);
  std::vector<std::size_t> out = b.presences;
  out.insert(out.end(), b.absences.begin(), b.absences.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> gather(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

ForestConfig unit_forest(const EvalConfig& cfg, const Rng& root, std::size_t unit) {
  ForestConfig f = cfg.forest;
  f.seed = root.substream("forest", unit).next_u64();
  return f;
}

}  // namespace

std::size_t default_thread_count() {
  if (const char* env = std::getenv("RA_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::size_t MetricReport::metric_index(std::string_view name) const {
  auto it = std::find(metrics.begin(), metrics.end(), name);
  if (it == metrics.end()) throw Error(ErrorKind::BadFormat, "report has no metric '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - metrics.begin());
}

void write_metric_report(const fs::path& path, const MetricReport& report) {
  CsvTable t;
  t.header.push_back("unit");
  t.header.insert(t.header.end(), report.metrics.begin(), report.metrics.end());
  for (std::size_t i = 0; i < report.units.size(); ++i) {
    std::vector<std::string> row{report.units[i]};
    for (double v : report.values.row(i)) row.push_back(std::isnan(v) ? "nan" : format_double(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

MetricReport read_metric_report(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header.front() != "unit") {
    throw Error(ErrorKind::BadFormat, path.string() + ": first column must be 'unit'");
  }
  MetricReport r;
  r.task = path.stem().string();
  r.metrics.assign(t.header.begin() + 1, t.header.end());
  r.values = Matrix(t.rows.size(), r.metrics.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) throw Error(ErrorKind::BadFormat, path.string() + ": ragged row");
    r.units.push_back(row[0]);
    for (std::size_t j = 1; j < row.size(); ++j) r.values(i, j - 1) = row[j] == "nan" ? kNaN : parse_double(row[j]);
  }
  return r;
}

MetricReport evaluate_presence_task(const Matrix& features, const Matrix& presence,
                                    std::span<const std::string> unit_names, const SplitIndices& split,
                                    const EvalConfig& cfg) {
  if (features.rows() != presence.rows() || unit_names.size() != presence.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "presence task: features, presence and names disagree");
  }
  if (split.train.empty() || split.validation.empty()) throw Error(ErrorKind::EmptySplit, "presence task: empty split");
  MetricReport report;
  report.task = "plant";
  report.units.assign(unit_names.begin(), unit_names.end());
  report.metrics = {"tss", "f1", "sensitivity", "specificity"};
  report.values = Matrix(presence.cols(), report.metrics.size(), kNaN);
  Rng root(cfg.seed);

  parallel_for(presence.cols(), cfg.threads, [&](std::size_t s) {
    std::vector<int> y(presence.rows());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = presence(i, s) > 0.0 ? 1 : 0;
    Rng rng = root.substream("balance", s);
    std::vector<std::size_t> train = balanced(split.train, y, rng);
    std::vector<std::size_t> val = balanced(split.validation, y, rng);
    if (train.empty() || val.empty()) return;
    Forest f = fit_classifier(select_rows(features, train), gather(y, train), unit_forest(cfg, root, s));
    Vector prob = predict_proba(f, select_rows(features, val));
    ConfusionCounts c = confusion_counts(gather(y, val), threshold_predictions(prob, cfg.threshold));
    ClassificationMetrics m = classification_metrics(c);
    auto row = report.values.row(s);
    row[0] = m.tss;
    row[1] = m.f1;
    row[2] = m.sensitivity;
    row[3] = m.specificity;
  });
  return report;
}

MetricReport evaluate_occurrence_task(const Matrix& features, std::span<const Point> locations,
                                      std::span<const Role> roles, std::span<const OccurrenceSet> occurrences,
                                      const EvalConfig& cfg) {
  if (features.rows() != locations.size() || roles.size() != locations.size()) {
    throw Error(ErrorKind::ShapeMismatch, "occurrence task: features, locations and roles disagree");
  }
  std::map<std::pair<double, double>, std::size_t> site_of;
  for (std::size_t i = 0; i < locations.size(); ++i) site_of.emplace(std::pair{locations[i].x, locations[i].y}, i);

  MetricReport report;
  report.task = "butterfly";
  report.metrics = {"boyce", "tss", "f1", "sensitivity"};
  report.values = Matrix(occurrences.size(), report.metrics.size(), kNaN);
  for (const auto& occ : occurrences) report.units.push_back(occ.species_id);
  Rng root(cfg.seed);

  parallel_for(occurrences.size(), cfg.threads, [&](std::size_t s) {
    Rng rng = root.substream("pseudo_absence", s);
    std::vector<LabeledPoint> points = make_pseudo_absences(occurrences[s], rng);
    std::vector<std::size_t> train_rows;
    std::vector<int> train_y;
    std::vector<std::size_t> val_rows;
    std::vector<int> val_y;
    for (const LabeledPoint& p : points) {
      auto it = site_of.find({p.location.x, p.location.y});
      if (it == site_of.end()) {
        throw Error(ErrorKind::BadFormat, "occurrence of '" + occurrences[s].species_id + "' matches no sample location");
      }
      Role role = roles[it->second];
      if (role == Role::Train) {
        train_rows.push_back(it->second);
        train_y.push_back(p.label);
      } else if (role == Role::Validation) {
        val_rows.push_back(it->second);
        val_y.push_back(p.label);
      }
    }
    auto has_both = [](const std::vector<int>& y) {
      return std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
    };
    if (!has_both(train_y) || val_y.empty()) return;
    Forest f = fit_classifier(select_rows(features, train_rows), train_y, unit_forest(cfg, root, s));
    Vector prob = predict_proba(f, select_rows(features, val_rows));
    Vector at_presence;
    for (std::size_t i = 0; i < val_y.size(); ++i) {
      if (val_y[i] == 1) at_presence.push_back(prob[i]);
    }
    auto row = report.values.row(s);
    if (!at_presence.empty()) row[0] = guarded([&] { return boyce_index(at_presence, prob, cfg.boyce); });
    ConfusionCounts c = confusion_counts(val_y, threshold_predictions(prob, cfg.threshold));
    if (c.tp + c.fn > 0 && c.tn + c.fp > 0) {
      ClassificationMetrics m = classification_metrics(c);
      row[1] = m.tss;
      row[2] = m.f1;
      row[3] = m.sensitivity;
    }
  });
  return report;
}

MetricReport evaluate_abundance_task(const Matrix& features, const TrophicTable& soil, const EvalConfig& cfg) {
  if (features.rows() != soil.sample_ids.size()) {
    throw Error(ErrorKind::ShapeMismatch, "abundance task: one feature row per soil sample");
  }
  TrophicTable norm = normalize_soil(soil);
  Strata strata = stratify_by_elevation(norm.elevation, cfg.soil_strata);
  Rng root(cfg.seed);
  Rng fold_rng = root.substream("soil_folds");
  std::vector<int> folds = stratified_folds(strata, cfg.soil_folds, fold_rng);

  std::vector<std::vector<std::size_t>> train_of(cfg.soil_folds);
  std::vector<std::vector<std::size_t>> test_of(cfg.soil_folds);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (int k = 0; k < cfg.soil_folds; ++k) (folds[i] == k ? test_of : train_of)[k].push_back(i);
  }
  std::vector<Matrix> train_x;
  std::vector<Matrix> test_x;
  for (int k = 0; k < cfg.soil_folds; ++k) {
    train_x.push_back(select_rows(features, train_of[k]));
    test_x.push_back(select_rows(features, test_of[k]));
  }

  std::size_t groups = norm.abundance.cols();
  MetricReport report;
  report.task = "soil";
  for (std::size_t g = 0; g < groups; ++g) report.units.push_back("g" + std::to_string(g + 1));
  report.metrics = {"mae", "spearman"};
  report.values = Matrix(groups, 2, kNaN);

  parallel_for(groups, cfg.threads, [&](std::size_t g) {
    Vector y(norm.abundance.rows());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = norm.abundance(i, g);
    Vector oof(y.size(), 0.0);
    for (int k = 0; k < cfg.soil_folds; ++k) {
      if (test_of[k].empty() || train_of[k].empty()) continue;
      Vector yk;
      for (std::size_t r : train_of[k]) yk.push_back(y[r]);
      Forest f = fit_regressor(train_x[k], yk, unit_forest(cfg, root, g * 64 + static_cast<std::size_t>(k)));
      Vector pred = predict(f, test_x[k]);
      for (std::size_t j = 0; j < pred.size(); ++j) oof[test_of[k][j]] = pred[j];
    }
    report.values(g, 0) = mae(y, oof);
    report.values(g, 1) = guarded([&] { return spearman_rho(y, oof); });
  });
  return report;
}

}  // namespace botaclip
