#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "botaclip/numerics.hpp"

namespace botaclip {

// Planar coordinates in meters (equal-area projection, e.g. EPSG:3035).
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct CellId {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  auto operator<=>(const CellId&) const = default;
};

// Chebyshev distance between two cells.
std::int64_t cell_distance(const CellId& a, const CellId& b);

inline constexpr double kDefaultCellSize = 5000.0;

// (floor(x / cell), floor(y / cell))
std::vector<CellId> assign_cells(std::span<const Point> points, double cell_size = kDefaultCellSize);

// Cells are sorted, shuffled with rng and dealt round-robin into k folds.
// Throws TooFewCells when there are fewer distinct cells than folds.
std::map<CellId, int> make_folds(std::span<const CellId> cells, int k, Rng& rng);

enum class Role { Train, Validation, Excluded };
std::string to_string(Role role);

struct FoldAssignment {
  int n_folds = 0;
  double cell_size = kDefaultCellSize;
  int active_fold = 0;
  std::vector<CellId> cells;  // per sample
  std::vector<int> fold;      // per sample
  std::vector<Role> role;     // per sample, relative to active_fold
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> excluded;
};

// Validation = samples in the fold's cells; excluded = samples in any cell at
// Chebyshev distance 1 from a validation cell; train = everything else.
SplitIndices buffered_split(const FoldAssignment& assignment, int fold_id);

// Cells, folds, and roles for `active_fold` in one call.
FoldAssignment make_fold_assignment(std::span<const Point> points, int n_folds, int active_fold,
                                    Rng& rng, double cell_size = kDefaultCellSize);

// Re-derive the per-sample roles for another fold.
void set_active_fold(FoldAssignment& assignment, int fold_id);

SplitIndices split_from_roles(std::span<const Role> roles);

struct LeakageReport {
  std::size_t cell_violations = 0;      // train/val pairs at Chebyshev distance < 2
  std::size_t distance_violations = 0;  // train/val pairs closer than cell_size
  double min_distance = 0.0;
};

// Exhaustive O(|train| * |val|) check.
LeakageReport audit_leakage(std::span<const Point> points, std::span<const CellId> cells,
                            const SplitIndices& split, double cell_size);

// Throws LeakageDetected if any training sample lies in a validation cell or
// its buffer ring.
void require_no_leakage(const FoldAssignment& assignment, std::span<const std::size_t> train);

}  // namespace botaclip
