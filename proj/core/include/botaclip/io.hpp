#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "botaclip/data_prep.hpp"
#include "botaclip/forest.hpp"
#include "botaclip/numerics.hpp"
#include "botaclip/parameter.hpp"
#include "botaclip/spatial_cv.hpp"

namespace botaclip {

namespace fs = std::filesystem;

// ---- embedding files ----------------------------------------------------------
//
// "EMB1" | version u32 | rows u32 | cols u32 | rows*cols f32 (row-major)
//        | id count u32 | per id: length u32 + bytes
// All integers and floats little-endian. The id table is optional: a file
// may end right after the payload.

inline constexpr std::uint32_t kEmbeddingVersion = 1;

struct EmbeddingFile {
  Matrix values;
  std::vector<std::string> ids;
};

// Values are narrowed to 32-bit floats. Ids, when given, must be unique and
// one per row.
void save_embeddings(const fs::path& path, const Matrix& values,
                     std::span<const std::string> ids = {});

// Widens to 64-bit; with normalize_on_load rows are l2-normalized (ZeroRow on
// an all-zero row). Throws BadMagic, TruncatedFile, BadFormat, Io.
EmbeddingFile load_embeddings(const fs::path& path, bool normalize_on_load = true);

// The stored 32-bit payload, untouched.
std::vector<float> load_embedding_payload(const fs::path& path);

// ---- checkpoints ---------------------------------------------------------------
//
// "CKPT" | version u32 | block count u32 | per block: name length u32, name,
// ndims u32, dims u64 each, f64 payload. Little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  void add(std::string name, Matrix tensor);
  const Matrix* find(std::string_view name) const;
};

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

Checkpoint checkpoint_from(const ParameterList& params);

// Copies every parameter whose name is present. With require_all, a missing
// name throws BadFormat. Shape disagreements throw ShapeMismatch. Returns the
// number of parameters loaded.
std::size_t load_parameters(const ParameterList& params, const Checkpoint& ckpt,
                            bool require_all = true);

Checkpoint forest_to_checkpoint(const Forest& forest);
Forest forest_from_checkpoint(const Checkpoint& ckpt);

// ---- CSV ----------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // BadFormat when missing
};

// Comma-separated, optional double quotes around fields.
CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

// releves.csv: plot_id,x_m,y_m,prodrome_class,species_id,bb_class (long
// format; an empty species_id records an empty plot). Plot order follows first
// appearance.
std::vector<Releve> read_releves(const fs::path& path);
void write_releves(const fs::path& path, std::span<const Releve> releves);

// Species columns in first-appearance order.
std::vector<std::string> species_index_of(std::span<const Releve> releves);

// cover.csv: plot_id,x_m,y_m,prodrome_class,<species...>
struct CoverTable {
  CoverMatrix cover;
  std::vector<Point> locations;
  std::vector<std::size_t> labels;
};
void write_cover_table(const fs::path& path, const CoverTable& table);
CoverTable read_cover_table(const fs::path& path);

// occurrences.csv: species_id,x_m,y_m,label with label 1 = presence and
// 0 = candidate absence. Species order follows first appearance.
std::vector<OccurrenceSet> read_occurrences(const fs::path& path);
void write_occurrences(const fs::path& path, std::span<const OccurrenceSet> sets);

// soil.csv: sample_id,x_m,y_m,elevation_m,g1..gK
TrophicTable read_soil(const fs::path& path);
void write_soil(const fs::path& path, const TrophicTable& table);

// Split manifest: sample_id,cell_ix,cell_iy,fold,role
void write_split_manifest(const fs::path& path, std::span<const std::string> sample_ids,
                          const FoldAssignment& assignment);
FoldAssignment read_split_manifest(const fs::path& path, std::vector<std::string>* sample_ids = nullptr);

// Labeled-matrix CSV: id,<columns...> with numeric cells.
struct LabeledMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
};
void write_labeled_matrix(const fs::path& path, const LabeledMatrix& m);
LabeledMatrix read_labeled_matrix(const fs::path& path);

// ---- hashing and manifests --------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

}  // namespace botaclip
