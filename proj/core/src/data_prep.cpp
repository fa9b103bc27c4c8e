#include "botaclip/data_prep.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

constexpr std::array<std::string_view, 7> kClassNames{"r", "+", "1", "2", "3", "4", "5"};

}  // namespace

double BraunBlanquetTable::lookup(std::string_view cls) const {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == cls) return percent[i];
  }
  throw Error(ErrorKind::UnknownClass, "unknown Braun-Blanquet class '" + std::string(cls) + "'");
}

double braun_blanquet_to_percent(std::string_view cls, const BraunBlanquetTable& table) {
  return table.lookup(cls);
}

CoverBuild build_cover_matrix(std::span<const Releve> releves,
                              std::span<const std::string> species_index,
                              const BraunBlanquetTable& table) {
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t j = 0; j < species_index.size(); ++j) {
    if (!column.emplace(species_index[j], j).second) {
      throw Error(ErrorKind::DuplicateEntry, "species index lists '" + species_index[j] + "' twice");
    }
  }
  CoverBuild out;
  out.cover.values = Matrix(releves.size(), species_index.size());
  out.cover.species.assign(species_index.begin(), species_index.end());
  for (std::size_t i = 0; i < releves.size(); ++i) {
    const Releve& r = releves[i];
    out.cover.plots.push_back(r.plot_id);
    out.labels.push_back(static_cast<std::size_t>(r.prodrome_class));
    out.locations.push_back(r.location);
    std::set<std::string> seen;
    for (const auto& [species, cls] : r.species_covers) {
      auto it = column.find(species);
      if (it == column.end()) {
        throw Error(ErrorKind::UnknownSpecies, "species '" + species + "' in plot '" + r.plot_id +
                                                   "' is not in the species index");
      }
      if (!seen.insert(species).second) {
        throw Error(ErrorKind::DuplicateEntry,
                    "species '" + species + "' recorded twice in plot '" + r.plot_id + "'");
      }
      out.cover.values(i, it->second) = table.lookup(cls);
    }
  }
  return out;
}

Matrix binarize_presence(const Matrix& cover) {
  Matrix out = cover;
  for (double& v : out.values()) v = v > 0.0 ? 1.0 : 0.0;
  return out;
}

std::vector<std::size_t> filter_by_support(const Matrix& binary, std::size_t min_presences,
                                           std::optional<std::size_t> max_presences) {
  if (max_presences && *max_presences < min_presences) {
    throw Error(ErrorKind::BadConfig, "max_presences below min_presences");
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < binary.cols(); ++j) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < binary.rows(); ++i) count += binary(i, j) > 0.0 ? 1 : 0;
    if (count >= min_presences && (!max_presences || count <= *max_presences)) keep.push_back(j);
  }
  return keep;
}

BalancedIndices balance_downsample(std::span<const std::size_t> presences,
                                   std::span<const std::size_t> absences, Rng& rng) {
  if (absences.size() < presences.size()) {
    throw Error(ErrorKind::InsufficientAbsences, std::to_string(absences.size()) + " absences for " +
                                                     std::to_string(presences.size()) + " presences");
  }
  BalancedIndices out;
  out.presences.assign(presences.begin(), presences.end());
  std::vector<std::size_t> pool(absences.begin(), absences.end());
  // Partial Fisher-Yates: the first |presences| slots are a uniform draw.
  for (std::size_t i = 0; i < presences.size(); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(presences.size());
  std::sort(pool.begin(), pool.end());
  out.absences = std::move(pool);
  return out;
}

std::vector<LabeledPoint> make_pseudo_absences(const OccurrenceSet& occurrences, Rng& rng) {
  auto key = [](const Point& p) { return std::make_pair(p.x, p.y); };
  std::set<std::pair<double, double>> presence_keys;
  for (const Point& p : occurrences.presences) presence_keys.insert(key(p));

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < occurrences.candidate_absences.size(); ++i) {
    if (!presence_keys.count(key(occurrences.candidate_absences[i]))) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw Error(ErrorKind::InsufficientAbsences,
                "species '" + occurrences.species_id + "' has no candidate absences");
  }
  std::vector<std::size_t> present(occurrences.presences.size());
  std::iota(present.begin(), present.end(), 0);
  BalancedIndices balanced = balance_downsample(present, candidates, rng);

  std::vector<LabeledPoint> out;
  out.reserve(2 * present.size());
  for (const Point& p : occurrences.presences) out.push_back({p, 1});
  for (std::size_t i : balanced.absences) out.push_back({occurrences.candidate_absences[i], 0});
  return out;
}

TrophicTable normalize_soil(const TrophicTable& raw) {
  TrophicTable out = raw;
  Matrix& a = out.abundance;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (double v : a.row(i)) {
      if (v < 0.0) throw Error(ErrorKind::BadFormat, "negative abundance");
      sum += v;
    }
    if (!(sum > 0.0)) {
      std::string id = i < raw.sample_ids.size() ? raw.sample_ids[i] : std::to_string(i);
      throw Error(ErrorKind::EmptySample, "sample '" + id + "' has no positive abundance");
    }
    for (double& v : a.row(i)) v /= sum;
  }
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double lo = a.rows() ? a(0, j) : 0.0;
    double hi = lo;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      lo = std::min(lo, a(i, j));
      hi = std::max(hi, a(i, j));
    }
    double range = hi - lo;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      a(i, j) = range > 0.0 ? (a(i, j) - lo) / range : 0.0;
    }
  }
  return out;
}

Strata stratify_by_elevation(std::span<const double> elevations, std::size_t n_strata) {
  if (n_strata < 2) throw Error(ErrorKind::BadConfig, "need at least 2 strata");
  std::size_t n = elevations.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return elevations[a] < elevations[b]; });
  std::vector<double> edges;
  for (std::size_t k = 1; k < n_strata; ++k) {
    std::size_t pos = k * n / n_strata;
    if (pos < n) edges.push_back(elevations[order[pos]]);
  }
  Strata out;
  out.ids.resize(n);
  out.sizes.assign(n_strata, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), elevations[i]) -
                                      edges.begin());
    out.ids[i] = s;
    ++out.sizes[s];
  }
  out.empty = static_cast<std::size_t>(std::count(out.sizes.begin(), out.sizes.end(), 0));
  return out;
}

std::vector<int> stratified_folds(const Strata& strata, int k, Rng& rng) {
  if (k < 2) throw Error(ErrorKind::BadConfig, "need at least 2 folds");
  std::vector<int> fold(strata.ids.size(), 0);
  for (std::size_t s = 0; s < strata.sizes.size(); ++s) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < strata.ids.size(); ++i) {
      if (strata.ids[i] == s) members.push_back(i);
    }
    Rng local = rng.substream("stratum", s);
    local.shuffle(std::span<std::size_t>(members));
    for (std::size_t m = 0; m < members.size(); ++m) {
      fold[members[m]] = static_cast<int>((m + s) % static_cast<std::size_t>(k));
    }
  }
  return fold;
}

}  // namespace botaclip
