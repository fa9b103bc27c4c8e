#include "botaclip/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
  std::ostringstream os;
  os << prefix << std::setw(width) << std::setfill('0') << i;
  return os.str();
}

Matrix gaussian(std::size_t rows, std::size_t cols, double sd, Rng rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = sd * rng.normal();
  return m;
}

// Value at quantile q of v (nearest rank on the sorted copy).
double quantile(Vector v, double q) {
  std::sort(v.begin(), v.end());
  auto idx = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  return v[idx];
}

}  // namespace

std::string percent_to_braun_blanquet(double percent) {
  if (percent < 0.3) return "r";
  if (percent < 1.0) return "+";
  if (percent < 5.0) return "1";
  if (percent < 25.0) return "2";
  if (percent < 50.0) return "3";
  if (percent < 75.0) return "4";
  return "5";
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.pairs == 0 || cfg.latent_dim == 0 || cfg.img_dim == 0 || cfg.n_species == 0 || cfg.views == 0 ||
      cfg.sites_per_cell == 0 || cfg.cell_stride == 0 || cfg.n_classes == 0) {
    throw Error(ErrorKind::BadConfig, "synthetic: counts must be >= 1");
  }
  if (!(cfg.cell_share >= 0.0 && cfg.cell_share <= 1.0) || !(cfg.sparsity >= 0.0 && cfg.sparsity < 1.0) ||
      cfg.noise < 0.0) {
    throw Error(ErrorKind::BadConfig, "synthetic: cell_share in [0,1], sparsity in [0,1), noise >= 0");
  }
  Rng root(cfg.seed);
  const std::size_t n = cfg.pairs;
  const std::size_t d = cfg.latent_dim;
  const std::size_t n_cells = (n + cfg.sites_per_cell - 1) / cfg.sites_per_cell;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_cells))));

  SyntheticDataset out;
  PairedDataset& pd = out.pairs;
  out.latents = Matrix(n, d);

  // Locations and latents.
  Matrix cell_mean = gaussian(n_cells, d, 1.0, root.substream("cell_latent"));
  Rng jitter = root.substream("site_latent");
  Rng place = root.substream("location");
  double a = std::sqrt(cfg.cell_share);
  double b = std::sqrt(1.0 - cfg.cell_share);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = i / cfg.sites_per_cell;
    double cx = static_cast<double>((c % side) * cfg.cell_stride);
    double cy = static_cast<double>((c / side) * cfg.cell_stride);
    pd.ids.push_back(padded("s", i, 5));
    pd.locations.push_back({(cx + 0.05 + 0.9 * place.uniform()) * cfg.cell_size,
                            (cy + 0.05 + 0.9 * place.uniform()) * cfg.cell_size});
    for (std::size_t k = 0; k < d; ++k) out.latents(i, k) = a * cell_mean(c, k) + b * jitter.normal();
  }

  // Image views.
  Matrix p_img = gaussian(cfg.img_dim, d, 1.0 / std::sqrt(static_cast<double>(d)), root.substream("p_img"));
  Matrix signal = matmul_nt(out.latents, p_img);
  for (std::size_t v = 0; v < cfg.views; ++v) {
    Rng noise = root.substream("view_noise", v);
    Matrix view = signal;
    if (cfg.noise > 0.0) {
      for (double& x : view.values()) x += cfg.noise * noise.normal();
    }
    pd.views.push_back(l2_normalize_rows(view));
  }

  // Species covers.
  Matrix p_tab = gaussian(cfg.n_species, d, 1.0, root.substream("p_tab"));
  Matrix raw = matmul_nt(out.latents, p_tab);
  pd.cover = Matrix(n, cfg.n_species);
  auto zeroed = static_cast<std::size_t>(std::ceil(cfg.sparsity * static_cast<double>(cfg.n_species)));
  zeroed = std::min(zeroed, cfg.n_species - 1);
  std::vector<std::size_t> order(cfg.n_species);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = raw.row(i);
    for (double& x : row) x = softplus(x);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return row[p] < row[q]; });
    for (std::size_t k = 0; k < zeroed; ++k) row[order[k]] = 0.0;
    double mx = *std::max_element(row.begin(), row.end());
    for (std::size_t j = 0; j < cfg.n_species; ++j) pd.cover(i, j) = mx > 0.0 ? std::min(100.0, 100.0 * row[j] / mx) : 0.0;
  }
  for (std::size_t j = 0; j < cfg.n_species; ++j) pd.species.push_back(padded("sp", j, 4));

  // Vegetation classes: nearest prototype direction.
  Matrix protos = gaussian(cfg.n_classes, d, 1.0, root.substream("classes"));
  Matrix class_scores = matmul_nt(out.latents, protos);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = class_scores.row(i);
    pd.labels.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }

  // Target species: thresholded latent functions with one pairwise term.
  out.targets = Matrix(n, cfg.target_species);
  Rng tr = root.substream("targets");
  for (std::size_t s = 0; s < cfg.target_species; ++s) {
    Vector w(d);
    for (double& x : w) x = tr.normal();
    std::size_t p = tr.uniform_index(d);
    std::size_t q = tr.uniform_index(d);
    double prevalence = 0.3 + 0.4 * tr.uniform();
    Vector score(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto t = out.latents.row(i);
      score[i] = dot(w, t) / norm(w) + 0.3 * t[p] * t[q];
    }
    double cut = quantile(score, 1.0 - prevalence);
    for (std::size_t i = 0; i < n; ++i) out.targets(i, s) = score[i] > cut ? 1.0 : 0.0;
    out.target_names.push_back(padded("target", s, 2));
  }

  // Presence-only species: top 20% of a latent direction are recorded.
  Rng br = root.substream("butterflies");
  for (std::size_t s = 0; s < cfg.butterfly_species; ++s) {
    Vector w(d);
    for (double& x : w) x = br.normal();
    Vector score(n);
    for (std::size_t i = 0; i < n; ++i) score[i] = dot(w, out.latents.row(i));
    double cut = quantile(score, 0.8);
    OccurrenceSet occ;
    occ.species_id = padded("bfly", s, 2);
    for (std::size_t i = 0; i < n; ++i) {
      (score[i] > cut ? occ.presences : occ.candidate_absences).push_back(pd.locations[i]);
    }
    out.occurrences.push_back(std::move(occ));
  }

  // Soil trophic groups at every site.
  if (cfg.soil_groups > 0) {
    Matrix p_soil = gaussian(cfg.soil_groups, d, 1.0 / std::sqrt(static_cast<double>(d)), root.substream("p_soil"));
    Matrix abundance = matmul_nt(out.latents, p_soil);
    Rng sn = root.substream("soil_noise");
    for (double& x : abundance.values()) x = softplus(2.0 * x + 0.3 * sn.normal());
    out.soil.sample_ids = pd.ids;
    out.soil.locations = pd.locations;
    for (std::size_t i = 0; i < n; ++i) out.soil.elevation.push_back(1500.0 + 400.0 * out.latents(i, 0) + 50.0 * sn.normal());
    out.soil.abundance = std::move(abundance);
  }
  return out;
}

void write_synthetic(const fs::path& dir, const SyntheticDataset& data) {
  fs::create_directories(dir);
  const PairedDataset& pd = data.pairs;
  CoverTable table{CoverMatrix{pd.cover, pd.species, pd.ids}, pd.locations, pd.labels};
  write_cover_table(dir / "cover.csv", table);

  std::vector<Releve> releves;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    Releve r;
    r.plot_id = pd.ids[i];
    r.location = pd.locations[i];
    r.prodrome_class = static_cast<int>(pd.labels[i]);
    for (std::size_t j = 0; j < pd.species.size(); ++j) {
      if (pd.cover(i, j) > 0.0) r.species_covers.emplace_back(pd.species[j], percent_to_braun_blanquet(pd.cover(i, j)));
    }
    releves.push_back(std::move(r));
  }
  write_releves(dir / "releves.csv", releves);

  for (std::size_t v = 0; v < pd.views.size(); ++v) {
    save_embeddings(dir / ("image_view" + std::to_string(v) + ".emb"), pd.views[v], pd.ids);
  }
  write_labeled_matrix(dir / "targets.csv", {pd.ids, data.target_names, data.targets});
  std::vector<std::string> latent_names;
  for (std::size_t k = 0; k < data.latents.cols(); ++k) latent_names.push_back("t" + std::to_string(k));
  write_labeled_matrix(dir / "latents.csv", {pd.ids, latent_names, data.latents});
  write_occurrences(dir / "occurrences.csv", data.occurrences);
  if (!data.soil.sample_ids.empty()) write_soil(dir / "soil.csv", data.soil);
}

PairedDataset load_paired_dataset(const fs::path& dir, bool normalize_on_load) {
  CoverTable table = read_cover_table(dir / "cover.csv");
  PairedDataset pd;
  pd.ids = table.cover.plots;
  pd.locations = table.locations;
  pd.cover = std::move(table.cover.values);
  pd.species = std::move(table.cover.species);
  pd.labels = std::move(table.labels);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < pd.ids.size(); ++i) row_of.emplace(pd.ids[i], i);

  for (std::size_t v = 0;; ++v) {
    fs::path path = dir / ("image_view" + std::to_string(v) + ".emb");
    if (!fs::exists(path)) break;
    EmbeddingFile emb = load_embeddings(path, normalize_on_load);
    if (emb.values.rows() != pd.size()) {
      throw Error(ErrorKind::ShapeMismatch, path.string() + ": row count differs from cover.csv");
    }
    if (emb.ids.empty()) {
      pd.views.push_back(std::move(emb.values));
      continue;
    }
    Matrix ordered(pd.size(), emb.values.cols());
    for (std::size_t i = 0; i < emb.ids.size(); ++i) {
      auto it = row_of.find(emb.ids[i]);
      if (it == row_of.end()) throw Error(ErrorKind::BadFormat, path.string() + ": unknown id '" + emb.ids[i] + "'");
      std::copy(emb.values.row(i).begin(), emb.values.row(i).end(), ordered.row(it->second).begin());
    }
    pd.views.push_back(std::move(ordered));
  }
  if (pd.views.empty()) throw Error(ErrorKind::EmptyData, dir.string() + ": no image_view<v>.emb files");
  return pd;
}

}  // namespace botaclip
