#pragma once

#include <cstdint>
#include <vector>

#include "botaclip/data_prep.hpp"
#include "botaclip/io.hpp"
#include "botaclip/training.hpp"

namespace botaclip {

// Desk-scale stand-in for the paired image/relevé data. Sites sit inside
// square cells; every cell has a latent mean and each site mixes it with
// its own jitter, so nearby sites are correlated.
struct SyntheticConfig {
  std::size_t pairs = 512;
  std::size_t latent_dim = 8;
  std::size_t img_dim = 768;
  std::size_t n_species = 200;
  std::size_t views = 2;
  double noise = 0.5;
  std::uint64_t seed = 0;

  std::size_t sites_per_cell = 4;
  // Occupied cells are this many cells apart; 1 packs them edge to edge.
  std::size_t cell_stride = 2;
  double cell_size = kDefaultCellSize;
  double cell_share = 0.8;  // variance share of the cell-level latent
  double sparsity = 0.7;    // fraction of cover entries zeroed per sample
  std::size_t n_classes = 8;
  std::size_t target_species = 10;
  std::size_t butterfly_species = 5;
  std::size_t soil_groups = 51;
};

struct SyntheticDataset {
  PairedDataset pairs;
  Matrix latents;  // samples x latent_dim
  Matrix targets;  // samples x target_species, 0/1
  std::vector<std::string> target_names;
  std::vector<OccurrenceSet> occurrences;
  TrophicTable soil;
};

// latent t = sqrt(share) mu_cell + sqrt(1 - share) eps
// image view = normalize(P_img t + noise eps_view)
// cover = softplus(P_tab t), lowest `sparsity` fraction zeroed, scaled to a
// row maximum of 100
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

// Braun-Blanquet class whose cover interval holds `percent`.
std::string percent_to_braun_blanquet(double percent);

// Files: cover.csv, releves.csv, image_view<v>.emb, targets.csv,
// occurrences.csv, soil.csv, latents.csv.
void write_synthetic(const fs::path& dir, const SyntheticDataset& data);

// cover.csv plus every image_view<v>.emb in `dir`, matched by id.
PairedDataset load_paired_dataset(const fs::path& dir, bool normalize_on_load = true);

}  // namespace botaclip
