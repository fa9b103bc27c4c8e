#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "botaclip/data_prep.hpp"
#include "botaclip/forest.hpp"
#include "botaclip/io.hpp"
#include "botaclip/metrics.hpp"
#include "botaclip/spatial_cv.hpp"

namespace botaclip {

struct EvalConfig {
  ForestConfig forest;  // seed is replaced by a per-unit substream
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  BoyceConfig boyce;
  int soil_folds = 5;
  std::size_t soil_strata = 5;
};

// Worker count: RA_THREADS when set and positive, else hardware concurrency.
std::size_t default_thread_count();

// One row per evaluated unit (species or trophic group). Cells that could not
// be computed (e.g. a class missing from the validation fold) are NaN.
struct MetricReport {
  std::string task;
  std::vector<std::string> units;
  std::vector<std::string> metrics;
  Matrix values;  // units x metrics

  std::size_t metric_index(std::string_view name) const;  // BadFormat when missing
};

// unit,<metrics...>; NaN cells are written as "nan".
void write_metric_report(const fs::path& path, const MetricReport& report);
MetricReport read_metric_report(const fs::path& path);

// Plant task. features: samples x d. presence: samples x units, 0/1. Train
// and validation sets are balanced per unit by downsampling the majority
// class. Metrics: tss, f1, sensitivity, specificity.
MetricReport evaluate_presence_task(const Matrix& features, const Matrix& presence,
                                    std::span<const std::string> unit_names, const SplitIndices& split,
                                    const EvalConfig& cfg);

// Butterfly task. Occurrence points are matched to sample locations by exact
// coordinates and inherit their split role; pseudo-absences are drawn 1:1.
// Boyce index uses the validation presences against all validation points.
// Metrics: boyce, tss, f1, sensitivity.
MetricReport evaluate_occurrence_task(const Matrix& features, std::span<const Point> locations,
                                      std::span<const Role> roles, std::span<const OccurrenceSet> occurrences,
                                      const EvalConfig& cfg);

// Soil task. features row i belongs to soil sample i. Abundances are
// normalized, samples stratified by elevation, and each group is predicted
// out of fold. Metrics: mae, spearman.
MetricReport evaluate_abundance_task(const Matrix& features, const TrophicTable& soil, const EvalConfig& cfg);

}  // namespace botaclip
