#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "botaclip/numerics.hpp"
#include "botaclip/spatial_cv.hpp"

namespace botaclip {

// Percent-cover values for the Braun-Blanquet classes r, +, 1, 2, 3, 4, 5
// (interval midpoints; r stands for a negligible cover).
struct BraunBlanquetTable {
  std::array<double, 7> percent{0.1, 0.5, 2.5, 15.0, 37.5, 62.5, 87.5};

  double lookup(std::string_view cls) const;
};

inline const BraunBlanquetTable kDefaultBraunBlanquet{};

// Throws UnknownClass for anything outside {r, +, 1, 2, 3, 4, 5}.
double braun_blanquet_to_percent(std::string_view cls,
                                 const BraunBlanquetTable& table = kDefaultBraunBlanquet);

struct Releve {
  std::string plot_id;
  Point location;
  std::vector<std::pair<std::string, std::string>> species_covers;  // species id, class
  int prodrome_class = 0;
};

struct CoverMatrix {
  Matrix values;  // plots x species, percent cover
  std::vector<std::string> species;
  std::vector<std::string> plots;
};

struct CoverBuild {
  CoverMatrix cover;
  std::vector<std::size_t> labels;
  std::vector<Point> locations;
};

// Absent species are 0, rows follow input order. Throws UnknownSpecies or
// DuplicateEntry.
CoverBuild build_cover_matrix(std::span<const Releve> releves,
                              std::span<const std::string> species_index,
                              const BraunBlanquetTable& table = kDefaultBraunBlanquet);

// out = 1 where cover > 0.
Matrix binarize_presence(const Matrix& cover);

// Species (column) indices with min <= presence count <= max.
std::vector<std::size_t> filter_by_support(const Matrix& binary, std::size_t min_presences,
                                           std::optional<std::size_t> max_presences = std::nullopt);

struct BalancedIndices {
  std::vector<std::size_t> presences;
  std::vector<std::size_t> absences;
};

// Uniform subsample of absences without replacement down to |presences|.
// Returned absence indices are sorted. Throws InsufficientAbsences.
BalancedIndices balance_downsample(std::span<const std::size_t> presences,
                                   std::span<const std::size_t> absences, Rng& rng);

struct OccurrenceSet {
  std::string species_id;
  std::vector<Point> presences;
  std::vector<Point> candidate_absences;
};

struct LabeledPoint {
  Point location;
  int label = 0;
};

// Presences labeled 1, candidates that coincide with a presence removed, the
// remainder downsampled 1:1 and labeled 0.
std::vector<LabeledPoint> make_pseudo_absences(const OccurrenceSet& occurrences, Rng& rng);

struct TrophicTable {
  std::vector<std::string> sample_ids;
  std::vector<Point> locations;
  std::vector<double> elevation;
  Matrix abundance;  // samples x groups
};

// Rows divided by their sums, then per-column min-max scaling. Constant
// columns become 0. Throws EmptySample for all-zero rows.
TrophicTable normalize_soil(const TrophicTable& raw);

struct Strata {
  std::vector<std::size_t> ids;    // per sample
  std::vector<std::size_t> sizes;  // per stratum
  std::size_t empty = 0;           // strata that received no samples
};

// Quantile bins: edges are the values at sorted positions floor(k n / s);
// equal values always share a stratum.
Strata stratify_by_elevation(std::span<const double> elevations, std::size_t n_strata);

// Fold per sample: each stratum is shuffled and dealt round-robin.
std::vector<int> stratified_folds(const Strata& strata, int k, Rng& rng);

}  // namespace botaclip
