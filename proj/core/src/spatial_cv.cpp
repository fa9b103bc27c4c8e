#include "botaclip/spatial_cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "botaclip/error.hpp"

namespace botaclip {

std::int64_t cell_distance(const CellId& a, const CellId& b) {
  std::int64_t dx = a.ix > b.ix ? a.ix - b.ix : b.ix - a.ix;
  std::int64_t dy = a.iy > b.iy ? a.iy - b.iy : b.iy - a.iy;
  return std::max(dx, dy);
}

std::vector<CellId> assign_cells(std::span<const Point> points, double cell_size) {
  if (!(cell_size > 0.0)) throw Error(ErrorKind::BadConfig, "cell_size must be positive");
  std::vector<CellId> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::NonFinite, "non-finite coordinate");
    }
    out.push_back({static_cast<std::int64_t>(std::floor(p.x / cell_size)),
                   static_cast<std::int64_t>(std::floor(p.y / cell_size))});
  }
  return out;
}

std::map<CellId, int> make_folds(std::span<const CellId> cells, int k, Rng& rng) {
  std::set<CellId> distinct(cells.begin(), cells.end());
  if (k < 2) throw Error(ErrorKind::BadConfig, "need at least 2 folds");
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::TooFewCells, std::to_string(distinct.size()) + " cells for " +
                                            std::to_string(k) + " folds");
  }
  std::vector<CellId> order(distinct.begin(), distinct.end());
  rng.shuffle(std::span<CellId>(order));
  std::map<CellId, int> out;
  for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = static_cast<int>(i % k);
  return out;
}

std::string to_string(Role role) {
  switch (role) {
    case Role::Train: return "train";
    case Role::Validation: return "validation";
    case Role::Excluded: return "excluded";
  }
  return "?";
}

SplitIndices buffered_split(const FoldAssignment& assignment, int fold_id) {
  if (fold_id < 0 || fold_id >= assignment.n_folds) {
    throw Error(ErrorKind::BadConfig, "fold id out of range");
  }
  std::set<CellId> val_cells;
  for (std::size_t i = 0; i < assignment.cells.size(); ++i) {
    if (assignment.fold[i] == fold_id) val_cells.insert(assignment.cells[i]);
  }
  SplitIndices out;
  for (std::size_t i = 0; i < assignment.cells.size(); ++i) {
    const CellId& c = assignment.cells[i];
    if (val_cells.count(c)) {
      out.validation.push_back(i);
      continue;
    }
    bool buffered = false;
    for (std::int64_t dx = -1; dx <= 1 && !buffered; ++dx) {
      for (std::int64_t dy = -1; dy <= 1 && !buffered; ++dy) {
        if (val_cells.count({c.ix + dx, c.iy + dy})) buffered = true;
      }
    }
    (buffered ? out.excluded : out.train).push_back(i);
  }
  return out;
}

void set_active_fold(FoldAssignment& assignment, int fold_id) {
  SplitIndices split = buffered_split(assignment, fold_id);
  assignment.active_fold = fold_id;
  assignment.role.assign(assignment.cells.size(), Role::Train);
  for (std::size_t i : split.validation) assignment.role[i] = Role::Validation;
  for (std::size_t i : split.excluded) assignment.role[i] = Role::Excluded;
}

FoldAssignment make_fold_assignment(std::span<const Point> points, int n_folds, int active_fold,
                                    Rng& rng, double cell_size) {
  FoldAssignment a;
  a.n_folds = n_folds;
  a.cell_size = cell_size;
  a.cells = assign_cells(points, cell_size);
  auto folds = make_folds(a.cells, n_folds, rng);
  a.fold.reserve(a.cells.size());
  for (const CellId& c : a.cells) a.fold.push_back(folds.at(c));
  set_active_fold(a, active_fold);
  return a;
}

SplitIndices split_from_roles(std::span<const Role> roles) {
  SplitIndices out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    switch (roles[i]) {
      case Role::Train: out.train.push_back(i); break;
      case Role::Validation: out.validation.push_back(i); break;
      case Role::Excluded: out.excluded.push_back(i); break;
    }
  }
  return out;
}

LeakageReport audit_leakage(std::span<const Point> points, std::span<const CellId> cells,
                            const SplitIndices& split, double cell_size) {
  LeakageReport report;
  report.min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t t : split.train) {
    for (std::size_t v : split.validation) {
      if (cell_distance(cells[t], cells[v]) < 2) ++report.cell_violations;
      double d = std::hypot(points[t].x - points[v].x, points[t].y - points[v].y);
      if (d < cell_size) ++report.distance_violations;
      report.min_distance = std::min(report.min_distance, d);
    }
  }
  return report;
}

void require_no_leakage(const FoldAssignment& assignment, std::span<const std::size_t> train) {
  std::set<CellId> val_cells;
  for (std::size_t i = 0; i < assignment.cells.size(); ++i) {
    if (assignment.fold[i] == assignment.active_fold) val_cells.insert(assignment.cells[i]);
  }
  for (std::size_t i : train) {
    const CellId& c = assignment.cells.at(i);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        if (val_cells.count({c.ix + dx, c.iy + dy})) {
          throw Error(ErrorKind::LeakageDetected,
                      "training sample " + std::to_string(i) + " lies in or next to a validation cell");
        }
      }
    }
  }
}

}  // namespace botaclip
