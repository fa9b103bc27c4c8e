#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "botaclip/io.hpp"
#include "botaclip/synthetic.hpp"
#include "testing.hpp"

using namespace botaclip;
using namespace botaclip::testing;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("botaclip_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string bytes_of(const fs::path& p) { return read_text(p); }

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

TEST(Embeddings, PayloadRoundTripIsBitIdentical) {
  Rng rng(1);
  Matrix m = random_matrix(rng, 4, 8);
  fs::path p = scratch("a.emb");
  save_embeddings(p, m);
  std::vector<float> payload = load_embedding_payload(p);
  ASSERT_EQ(payload.size(), 32u);
  for (std::size_t k = 0; k < 32; ++k) {
    float expect = static_cast<float>(m.values()[k]);
    EXPECT_EQ(std::memcmp(&payload[k], &expect, sizeof(float)), 0);
  }
  EmbeddingFile raw = load_embeddings(p, false);
  for (std::size_t k = 0; k < 32; ++k) EXPECT_EQ(raw.values.values()[k], static_cast<double>(payload[k]));
  // Saving the widened values again reproduces the file byte for byte.
  fs::path q = scratch("b.emb");
  save_embeddings(q, raw.values);
  EXPECT_EQ(bytes_of(p), bytes_of(q));
}

TEST(Embeddings, HeaderLayout) {
  fs::path p = scratch("h.emb");
  save_embeddings(p, Matrix(2, 3, 1.0));
  std::string b = bytes_of(p);
  ASSERT_GE(b.size(), 16u + 24u);
  EXPECT_EQ(b.substr(0, 4), "EMB1");
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24;
  };
  EXPECT_EQ(u32(4), kEmbeddingVersion);
  EXPECT_EQ(u32(8), 2u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(b.size(), 16u + 24u);
}

TEST(Embeddings, IdsAndNormalization) {
  fs::path p = scratch("ids.emb");
  std::vector<std::string> ids{"x", "yy"};
  save_embeddings(p, Matrix::from_rows({{3, 4}, {0, 2}}), ids);
  EmbeddingFile f = load_embeddings(p);
  EXPECT_EQ(f.ids, ids);
  EXPECT_NEAR(f.values(0, 0), 0.6, 1e-7);
  EXPECT_NEAR(f.values(1, 1), 1.0, 1e-15);
  std::vector<std::string> dup{"x", "x"};
  EXPECT_ERROR_KIND(DuplicateEntry, save_embeddings(scratch("dup.emb"), Matrix(2, 2, 1.0), dup));
}

TEST(Embeddings, Errors) {
  fs::path p = scratch("t.emb");
  save_embeddings(p, Matrix(3, 4, 0.5));
  std::string b = bytes_of(p);
  fs::path cut = scratch("cut.emb");
  write_bytes(cut, b.substr(0, b.size() - 5));
  EXPECT_ERROR_KIND(TruncatedFile, load_embeddings(cut));
  fs::path magic = scratch("magic.emb");
  std::string m = b;
  m[0] = 'X';
  write_bytes(magic, m);
  EXPECT_ERROR_KIND(BadMagic, load_embeddings(magic));
  fs::path zero = scratch("zero.emb");
  save_embeddings(zero, Matrix(2, 2, 0.0));
  EXPECT_ERROR_KIND(ZeroRow, load_embeddings(zero, true));
  EXPECT_NO_THROW(load_embeddings(zero, false));
  EXPECT_ERROR_KIND(Io, load_embeddings(scratch("missing.emb")));
}

TEST(Checkpoint, RoundTripAndErrors) {
  Rng rng(2);
  Checkpoint c;
  c.add("w", random_matrix(rng, 3, 5));
  c.add("b", random_matrix(rng, 1, 5));
  fs::path p = scratch("m.ckpt");
  save_checkpoint(p, c);
  Checkpoint back = load_checkpoint(p);
  EXPECT_EQ(back.names, c.names);
  EXPECT_EQ(back.tensors, c.tensors);
  EXPECT_ERROR_KIND(DuplicateEntry, c.add("w", Matrix(1, 1)));
  std::string b = bytes_of(p);
  EXPECT_EQ(b.substr(0, 4), "CKPT");
  write_bytes(scratch("cut.ckpt"), b.substr(0, b.size() - 1));
  EXPECT_ERROR_KIND(TruncatedFile, load_checkpoint(scratch("cut.ckpt")));
  b[1] = 'Z';
  write_bytes(scratch("bad.ckpt"), b);
  EXPECT_ERROR_KIND(BadMagic, load_checkpoint(scratch("bad.ckpt")));
}

TEST(Checkpoint, LoadParameters) {
  Parameter w("w", 2, 2), v("v", 1, 3);
  Checkpoint c;
  c.add("w", Matrix(2, 2, 7.0));
  EXPECT_ERROR_KIND(BadFormat, load_parameters({&w, &v}, c, true));
  EXPECT_EQ(load_parameters({&w, &v}, c, false), 1u);
  EXPECT_EQ(w.value, Matrix(2, 2, 7.0));
  Checkpoint bad;
  bad.add("w", Matrix(3, 1));
  EXPECT_ERROR_KIND(ShapeMismatch, load_parameters({&w}, bad, false));
}

TEST(Checkpoint, ForestRoundTrip) {
  Rng rng(3);
  Matrix x = random_matrix(rng, 40, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) y.push_back(x(i, 1) > 0);
  ForestConfig cfg;
  cfg.n_trees = 7;
  Forest f = fit_classifier(x, y, cfg);
  fs::path p = scratch("f.ckpt");
  save_checkpoint(p, forest_to_checkpoint(f));
  Forest back = forest_from_checkpoint(load_checkpoint(p));
  EXPECT_EQ(predict_proba(back, x), predict_proba(f, x));
}

TEST(Csv, SeventeenDigitRoundTrip) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    double v = rng.normal() * std::pow(10.0, static_cast<double>(random_size(rng, 0, 40)) - 20.0);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  for (double v : {0.0, -0.0, 1e-308, 5e-324, 1.7976931348623157e308, 0.1, 1.0 / 3.0}) {
    EXPECT_EQ(parse_double(format_double(v)), v) << v;
  }
  EXPECT_ERROR_KIND(BadFormat, parse_double("abc"));
  EXPECT_ERROR_KIND(BadFormat, parse_int("1.5"));
}

TEST(Csv, QuotedFieldsAndMissingColumn) {
  fs::path p = scratch("q.csv");
  write_text(p, "a,b\n\"x,y\",2\n");
  CsvTable t = read_csv(p);
  EXPECT_EQ(t.rows[0][0], "x,y");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_ERROR_KIND(BadFormat, t.column("c"));
  write_text(p, "a,b\n1\n");
  EXPECT_ERROR_KIND(BadFormat, read_csv(p));
}

TEST(Csv, LabeledMatrixRoundTrip) {
  Rng rng(5);
  LabeledMatrix m{{"r1", "r2", "r3"}, {"c1", "c2"}, random_matrix(rng, 3, 2, 1e3)};
  fs::path p = scratch("lm.csv");
  write_labeled_matrix(p, m);
  LabeledMatrix back = read_labeled_matrix(p);
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_EQ(back.columns, m.columns);
  EXPECT_EQ(back.values, m.values);
}

TEST(Csv, DomainTablesRoundTrip) {
  SyntheticConfig cfg;
  cfg.pairs = 24;
  cfg.img_dim = 6;
  cfg.n_species = 10;
  cfg.soil_groups = 4;
  SyntheticDataset s = generate_synthetic(cfg);

  fs::path occ = scratch("occ.csv");
  write_occurrences(occ, s.occurrences);
  auto sets = read_occurrences(occ);
  ASSERT_EQ(sets.size(), s.occurrences.size());
  EXPECT_EQ(sets[0].species_id, s.occurrences[0].species_id);
  EXPECT_EQ(sets[0].presences, s.occurrences[0].presences);
  EXPECT_EQ(sets[0].candidate_absences, s.occurrences[0].candidate_absences);

  fs::path soil = scratch("soil.csv");
  write_soil(soil, s.soil);
  TrophicTable t = read_soil(soil);
  EXPECT_EQ(t.abundance, s.soil.abundance);
  EXPECT_EQ(t.elevation, s.soil.elevation);
  EXPECT_EQ(t.locations, s.soil.locations);

  fs::path cover = scratch("cover.csv");
  CoverTable ct{CoverMatrix{s.pairs.cover, s.pairs.species, s.pairs.ids}, s.pairs.locations, s.pairs.labels};
  write_cover_table(cover, ct);
  CoverTable back = read_cover_table(cover);
  EXPECT_EQ(back.cover.values, ct.cover.values);
  EXPECT_EQ(back.labels, ct.labels);
  EXPECT_EQ(back.cover.species, ct.cover.species);

  Rng rng(6);
  FoldAssignment a = make_fold_assignment(s.pairs.locations, 3, 1, rng);
  fs::path split = scratch("split.csv");
  write_split_manifest(split, s.pairs.ids, a);
  std::vector<std::string> ids;
  FoldAssignment b = read_split_manifest(split, &ids);
  EXPECT_EQ(ids, s.pairs.ids);
  EXPECT_EQ(b.fold, a.fold);
  EXPECT_EQ(b.role, a.role);
  EXPECT_EQ(b.cells, a.cells);
  EXPECT_EQ(b.active_fold, 1);
}

TEST(Csv, RelevesRoundTrip) {
  std::vector<Releve> rs{{"p1", {100.5, 200.25}, {{"a", "5"}, {"b", "+"}}, 3}, {"p2", {0, 0}, {}, 1}};
  fs::path p = scratch("rel.csv");
  write_releves(p, rs);
  std::vector<Releve> back = read_releves(p);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].species_covers, rs[0].species_covers);
  EXPECT_EQ(back[0].location, rs[0].location);
  EXPECT_TRUE(back[1].species_covers.empty());
  EXPECT_EQ(species_index_of(back), (std::vector<std::string>{"a", "b"}));
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::path p = scratch("abc.txt");
  write_text(p, "abc");
  EXPECT_EQ(sha256_file(p), sha256_hex("abc"));
}

TEST(Synthetic, Contracts) {
  SyntheticConfig cfg;
  cfg.pairs = 64;
  cfg.img_dim = 16;
  cfg.n_species = 40;
  cfg.noise = 0.0;
  cfg.seed = 9;
  SyntheticDataset s = generate_synthetic(cfg);
  ASSERT_EQ(s.pairs.views.size(), 2u);
  EXPECT_EQ(s.pairs.views[0], s.pairs.views[1]);
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    std::size_t zeros = 0;
    for (double v : s.pairs.cover.row(i)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
      zeros += v == 0.0;
    }
    EXPECT_GE(static_cast<double>(zeros), 0.7 * 40);
    EXPECT_NEAR(norm(s.pairs.views[0].row(i)), 1.0, 1e-12);
  }
  SyntheticDataset again = generate_synthetic(cfg);
  EXPECT_EQ(again.pairs.views, s.pairs.views);
  EXPECT_EQ(again.pairs.cover, s.pairs.cover);
  EXPECT_EQ(again.latents, s.latents);
  cfg.noise = 0.5;
  SyntheticDataset noisy = generate_synthetic(cfg);
  EXPECT_NE(noisy.pairs.views[0], noisy.pairs.views[1]);
}

TEST(Synthetic, SpatialAutocorrelation) {
  SyntheticConfig cfg;
  cfg.pairs = 200;
  cfg.img_dim = 8;
  SyntheticDataset s = generate_synthetic(cfg);
  std::vector<CellId> cells = assign_cells(s.pairs.locations, cfg.cell_size);
  double same = 0, diff = 0;
  std::size_t ns = 0, nd = 0;
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < s.pairs.size(); ++j) {
      double d = dot(s.latents.row(i), s.latents.row(j)) /
                 (norm(s.latents.row(i)) * norm(s.latents.row(j)));
      if (cells[i] == cells[j]) {
        same += d;
        ++ns;
      } else {
        diff += d;
        ++nd;
      }
    }
  }
  EXPECT_GT(same / static_cast<double>(ns), diff / static_cast<double>(nd) + 0.3);
}

TEST(Synthetic, BraunBlanquetBins) {
  EXPECT_EQ(percent_to_braun_blanquet(0.1), "r");
  EXPECT_EQ(percent_to_braun_blanquet(0.5), "+");
  EXPECT_EQ(percent_to_braun_blanquet(87.5), "5");
  for (std::string c : {"r", "+", "1", "2", "3", "4", "5"}) {
    EXPECT_EQ(percent_to_braun_blanquet(braun_blanquet_to_percent(c)), c);
  }
}

TEST(Synthetic, WriteAndLoadDirectory) {
  SyntheticConfig cfg;
  cfg.pairs = 32;
  cfg.img_dim = 6;
  cfg.n_species = 12;
  SyntheticDataset s = generate_synthetic(cfg);
  fs::path dir = scratch("synth_dir");
  write_synthetic(dir, s);
  for (const char* f : {"cover.csv", "releves.csv", "image_view0.emb", "image_view1.emb", "targets.csv",
                        "occurrences.csv", "soil.csv", "latents.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  PairedDataset back = load_paired_dataset(dir);
  EXPECT_EQ(back.ids, s.pairs.ids);
  EXPECT_EQ(back.cover, s.pairs.cover);
  ASSERT_EQ(back.views.size(), 2u);
  EXPECT_LT(max_abs_diff(back.views[0], s.pairs.views[0]), 1e-6);
}
