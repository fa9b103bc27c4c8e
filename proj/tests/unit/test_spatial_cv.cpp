#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "botaclip/spatial_cv.hpp"
#include "testing.hpp"

using namespace botaclip;
using namespace botaclip::testing;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, double extent) {
  std::vector<Point> pts(n);
  for (Point& p : pts) p = {extent * (rng.uniform() - 0.5), extent * (rng.uniform() - 0.5)};
  return pts;
}

FoldAssignment manual(std::vector<CellId> cells, std::vector<int> fold, int n_folds, int active) {
  FoldAssignment a;
  a.n_folds = n_folds;
  a.cells = std::move(cells);
  a.fold = std::move(fold);
  set_active_fold(a, active);
  return a;
}

}  // namespace

TEST(Cells, Examples) {
  std::vector<Point> pts{{12000, 3000}, {-1, -1}, {5000, 0}};
  std::vector<CellId> c = assign_cells(pts, 5000);
  EXPECT_EQ(c[0], (CellId{2, 0}));
  EXPECT_EQ(c[1], (CellId{-1, -1}));
  EXPECT_EQ(c[2], (CellId{1, 0}));
}

TEST(Cells, TranslationConsistent) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    double cell = 1000.0 * static_cast<double>(random_size(rng, 1, 10));
    std::vector<Point> pts = random_points(rng, 50, 1e5);
    std::vector<Point> shifted = pts;
    for (Point& p : shifted) {
      p.x += cell;
      p.y -= cell;
    }
    auto a = assign_cells(pts, cell);
    auto b = assign_cells(shifted, cell);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_EQ(b[i].ix, a[i].ix + 1);
      EXPECT_EQ(b[i].iy, a[i].iy - 1);
    }
  }
}

TEST(Folds, TenCellsFiveFolds) {
  std::vector<CellId> cells;
  for (int i = 0; i < 10; ++i) cells.push_back({i, 0});
  Rng a(3), b(3);
  auto m = make_folds(cells, 5, a);
  std::vector<int> per(5, 0);
  for (const auto& [cell, f] : m) ++per[static_cast<std::size_t>(f)];
  EXPECT_EQ(per, std::vector<int>(5, 2));
  EXPECT_EQ(m, make_folds(cells, 5, b));
  Rng c(3);
  std::vector<CellId> few(cells.begin(), cells.begin() + 4);
  EXPECT_ERROR_KIND(TooFewCells, make_folds(few, 5, c));
}

TEST(Folds, SizesDifferByAtMostOne) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    int k = static_cast<int>(random_size(rng, 2, 7));
    std::size_t n = random_size(rng, static_cast<std::size_t>(k), 40);
    std::vector<CellId> cells;
    for (std::size_t i = 0; i < n; ++i) cells.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i % 3)});
    auto m = make_folds(cells, k, rng);
    std::vector<int> per(static_cast<std::size_t>(k), 0);
    for (const auto& [cell, f] : m) ++per[static_cast<std::size_t>(f)];
    EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1);
  }
}

TEST(Split, DiagonalNeighbourIsExcluded) {
  FoldAssignment a = manual({{0, 0}, {1, 1}, {2, 0}, {5, 5}}, {0, 1, 1, 1}, 2, 0);
  SplitIndices s = buffered_split(a, 0);
  EXPECT_EQ(s.validation, std::vector<std::size_t>{0});
  EXPECT_EQ(s.excluded, std::vector<std::size_t>{1});
  EXPECT_EQ(s.train, (std::vector<std::size_t>{2, 3}));
}

TEST(Split, ValidationWinsOverAdjacency) {
  // (0,0) and (1,0) are both validation and adjacent to each other.
  FoldAssignment a = manual({{0, 0}, {1, 0}, {4, 4}}, {0, 0, 1}, 2, 0);
  SplitIndices s = buffered_split(a, 0);
  EXPECT_EQ(s.validation, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(s.excluded.empty());
  EXPECT_EQ(to_string(a.role[2]), to_string(Role::Train));
}

TEST(Split, ExhaustiveLeakageProperty) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    std::vector<Point> pts = random_points(rng, 400, 60000.0);
    int k = static_cast<int>(random_size(rng, 2, 6));
    int fold = static_cast<int>(random_size(rng, 0, static_cast<std::size_t>(k - 1)));
    FoldAssignment a = make_fold_assignment(pts, k, fold, rng, 5000.0);
    SplitIndices s = buffered_split(a, fold);
    EXPECT_EQ(s.train.size() + s.validation.size() + s.excluded.size(), pts.size());
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.excluded.begin(), s.excluded.end());
    EXPECT_EQ(all.size(), pts.size());
    // Independent oracle: brute-force over pairs.
    double min_d = INFINITY;
    for (std::size_t i : s.train) {
      for (std::size_t j : s.validation) {
        EXPECT_GE(cell_distance(a.cells[i], a.cells[j]), 2);
        min_d = std::min(min_d, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
      }
    }
    EXPECT_GE(min_d, 5000.0);
    LeakageReport r = audit_leakage(pts, a.cells, s, 5000.0);
    EXPECT_EQ(r.cell_violations, 0u);
    EXPECT_EQ(r.distance_violations, 0u);
    EXPECT_NO_THROW(require_no_leakage(a, s.train));
  }
}

TEST(Split, LeakageDetected) {
  FoldAssignment a = manual({{0, 0}, {1, 0}, {3, 0}}, {0, 1, 1}, 2, 0);
  std::vector<std::size_t> train{1, 2};
  EXPECT_ERROR_KIND(LeakageDetected, require_no_leakage(a, train));
  std::vector<Point> pts{{100, 100}, {5100, 100}, {15100, 100}};
  SplitIndices s{train, {0}, {}};
  LeakageReport r = audit_leakage(pts, a.cells, s, 5000.0);
  EXPECT_EQ(r.cell_violations, 1u);
  EXPECT_EQ(r.distance_violations, 0u);
  EXPECT_DOUBLE_EQ(r.min_distance, 5000.0);
}

TEST(Split, RolesRoundTripAndActiveFold) {
  Rng rng(6);
  std::vector<Point> pts = random_points(rng, 200, 50000.0);
  FoldAssignment a = make_fold_assignment(pts, 5, 0, rng);
  for (int f = 0; f < 5; ++f) {
    set_active_fold(a, f);
    SplitIndices from_roles = split_from_roles(a.role);
    SplitIndices direct = buffered_split(a, f);
    EXPECT_EQ(from_roles.train, direct.train);
    EXPECT_EQ(from_roles.validation, direct.validation);
    EXPECT_EQ(from_roles.excluded, direct.excluded);
    for (std::size_t i : direct.validation) EXPECT_EQ(a.fold[i], f);
  }
}
