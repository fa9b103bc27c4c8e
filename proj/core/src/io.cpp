#include "botaclip/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

constexpr std::array<char, 4> kEmbMagic{'E', 'M', 'B', '1'};
constexpr std::array<char, 4> kCkptMagic{'C', 'K', 'P', 'T'};

class Writer {
public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.append(c, n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>(v >> (8 * i) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>(v >> (8 * i) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  const std::string& data() const { return buf_; }

private:
  std::string buf_;
};

class Reader {
public:
  Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorKind::TruncatedFile, what_ + ": file ends " + std::to_string(n - remaining()) +
                                                " bytes early");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void magic(const std::array<char, 4>& expected) {
    if (remaining() < 4 || std::memcmp(data_.data() + pos_, expected.data(), 4) != 0) {
      throw Error(ErrorKind::BadMagic, what_ + ": expected magic '" + std::string(expected.data(), 4) + "'");
    }
    pos_ += 4;
  }

private:
  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void check_unique(std::span<const std::string> ids, const std::string& what) {
  std::set<std::string_view> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateEntry, what + ": duplicate id '" + id + "'");
  }
}

Role parse_role(std::string_view s) {
  if (s == "train") return Role::Train;
  if (s == "validation") return Role::Validation;
  if (s == "excluded") return Role::Excluded;
  throw Error(ErrorKind::BadFormat, "unknown split role '" + std::string(s) + "'");
}

}  // namespace

// ---- text and hashing ---------------------------------------------------------

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

// ---- embeddings ---------------------------------------------------------------

void save_embeddings(const fs::path& path, const Matrix& values, std::span<const std::string> ids) {
  if (!ids.empty()) {
    if (ids.size() != values.rows()) throw Error(ErrorKind::ShapeMismatch, "embedding ids: one per row");
    check_unique(ids, "embedding ids");
  }
  if (!values.all_finite()) throw Error(ErrorKind::NonFinite, "embeddings contain non-finite values");
  Writer w;
  w.bytes(kEmbMagic.data(), 4);
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(values.rows()));
  w.u32(static_cast<std::uint32_t>(values.cols()));
  for (double v : values.values()) w.f32(static_cast<float>(v));
  if (!ids.empty()) {
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (const auto& id : ids) w.str(id);
  }
  write_text(path, w.data());
}

namespace {

struct RawEmbeddings {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> payload;
  std::vector<std::string> ids;
};

RawEmbeddings read_raw_embeddings(const fs::path& path) {
  Reader r(read_text(path), path.string());
  r.magic(kEmbMagic);
  std::uint32_t version = r.u32();
  if (version != kEmbeddingVersion) {
    throw Error(ErrorKind::BadFormat, path.string() + ": unsupported version " + std::to_string(version));
  }
  RawEmbeddings out;
  out.rows = r.u32();
  out.cols = r.u32();
  std::size_t count = out.rows * out.cols;
  r.need(count * 4);
  out.payload.resize(count);
  for (float& v : out.payload) v = r.f32();
  if (!r.at_end()) {
    std::uint32_t n = r.u32();
    if (n != out.rows) throw Error(ErrorKind::BadFormat, path.string() + ": id table size differs from rows");
    for (std::uint32_t i = 0; i < n; ++i) out.ids.push_back(r.str());
    if (!r.at_end()) throw Error(ErrorKind::BadFormat, path.string() + ": trailing bytes");
    check_unique(out.ids, path.string());
  }
  return out;
}

}  // namespace

std::vector<float> load_embedding_payload(const fs::path& path) { return read_raw_embeddings(path).payload; }

EmbeddingFile load_embeddings(const fs::path& path, bool normalize_on_load) {
  RawEmbeddings raw = read_raw_embeddings(path);
  EmbeddingFile out;
  out.values = Matrix(raw.rows, raw.cols);
  auto dst = out.values.values();
  for (std::size_t i = 0; i < raw.payload.size(); ++i) dst[i] = static_cast<double>(raw.payload[i]);
  if (!out.values.all_finite()) throw Error(ErrorKind::NonFinite, path.string() + ": non-finite payload");
  if (normalize_on_load) out.values = l2_normalize_rows(out.values);
  out.ids = std::move(raw.ids);
  return out;
}

// ---- checkpoints --------------------------------------------------------------

void Checkpoint::add(std::string name, Matrix tensor) {
  if (find(name)) throw Error(ErrorKind::DuplicateEntry, "checkpoint block '" + name + "' added twice");
  names.push_back(std::move(name));
  tensors.push_back(std::move(tensor));
}

const Matrix* Checkpoint::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return &tensors[i];
  }
  return nullptr;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCkptMagic.data(), 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.names.size()));
  for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
    const Matrix& m = ckpt.tensors[i];
    w.str(ckpt.names[i]);
    w.u32(2);
    w.u64(m.rows());
    w.u64(m.cols());
    for (double v : m.values()) w.f64(v);
  }
  write_text(path, w.data());
}

Checkpoint load_checkpoint(const fs::path& path) {
  Reader r(read_text(path), path.string());
  r.magic(kCkptMagic);
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::BadFormat, path.string() + ": unsupported version " + std::to_string(version));
  }
  std::uint32_t blocks = r.u32();
  Checkpoint out;
  for (std::uint32_t b = 0; b < blocks; ++b) {
    std::string name = r.str();
    std::uint32_t ndims = r.u32();
    if (ndims == 0 || ndims > 2) throw Error(ErrorKind::BadFormat, "block '" + name + "': ndims must be 1 or 2");
    std::uint64_t rows = ndims == 2 ? r.u64() : 1;
    std::uint64_t cols = r.u64();
    r.need(rows * cols * 8);
    std::vector<double> data(rows * cols);
    for (double& v : data) v = r.f64();
    out.add(std::move(name), Matrix(rows, cols, std::move(data)));
  }
  if (!r.at_end()) throw Error(ErrorKind::BadFormat, path.string() + ": trailing bytes");
  return out;
}

Checkpoint checkpoint_from(const ParameterList& params) {
  Checkpoint out;
  for (const Parameter* p : params) out.add(p->name, p->value);
  return out;
}

std::size_t load_parameters(const ParameterList& params, const Checkpoint& ckpt, bool require_all) {
  std::size_t loaded = 0;
  for (Parameter* p : params) {
    const Matrix* m = ckpt.find(p->name);
    if (!m) {
      if (require_all) throw Error(ErrorKind::BadFormat, "checkpoint lacks parameter '" + p->name + "'");
      continue;
    }
    if (m->rows() != p->value.rows() || m->cols() != p->value.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint block '" + p->name + "' has shape " +
                                                std::to_string(m->rows()) + "x" + std::to_string(m->cols()));
    }
    p->value = *m;
    ++loaded;
  }
  return loaded;
}

Checkpoint forest_to_checkpoint(const Forest& forest) {
  Checkpoint out;
  out.add("forest.meta", Matrix(1, 3, {forest.task == ForestTask::Classification ? 0.0 : 1.0,
                                       static_cast<double>(forest.n_features),
                                       static_cast<double>(forest.trees.size())}));
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& nodes = forest.trees[t].nodes;
    Matrix m(nodes.size(), 7);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      m(i, 0) = n.feature;
      m(i, 1) = n.threshold;
      m(i, 2) = n.left;
      m(i, 3) = n.right;
      m(i, 4) = n.value;
      m(i, 5) = static_cast<double>(n.n_samples);
      m(i, 6) = n.impurity;
    }
    out.add("tree." + std::to_string(t), std::move(m));
  }
  return out;
}

Forest forest_from_checkpoint(const Checkpoint& ckpt) {
  const Matrix* meta = ckpt.find("forest.meta");
  if (!meta || meta->size() != 3) throw Error(ErrorKind::BadFormat, "checkpoint is not a forest");
  Forest f;
  f.task = (*meta)(0, 0) == 0.0 ? ForestTask::Classification : ForestTask::Regression;
  f.n_features = static_cast<std::size_t>((*meta)(0, 1));
  auto n_trees = static_cast<std::size_t>((*meta)(0, 2));
  for (std::size_t t = 0; t < n_trees; ++t) {
    const Matrix* m = ckpt.find("tree." + std::to_string(t));
    if (!m || m->cols() != 7) throw Error(ErrorKind::BadFormat, "forest checkpoint lacks tree " + std::to_string(t));
    Tree tree;
    for (std::size_t i = 0; i < m->rows(); ++i) {
      TreeNode n;
      n.feature = static_cast<int>((*m)(i, 0));
      n.threshold = (*m)(i, 1);
      n.left = static_cast<int>((*m)(i, 2));
      n.right = static_cast<int>((*m)(i, 3));
      n.value = (*m)(i, 4);
      n.n_samples = static_cast<std::size_t>((*m)(i, 5));
      n.impurity = (*m)(i, 6);
      tree.nodes.push_back(n);
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

// ---- CSV ------------------------------------------------------------------------

std::size_t CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::BadFormat, "CSV lacks column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::BadFormat, path.string() + ": empty CSV");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      throw Error(ErrorKind::BadFormat, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                            std::to_string(t.header.size()) + " fields, got " +
                                            std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out.push_back(',');
      out += csv_field(fields[i]);
    }
    out.push_back('\n');
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  write_text(path, out);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error(ErrorKind::BadFormat, "cannot format double");
  return std::string(buf.data(), end);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::BadFormat, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::BadFormat, "not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<Releve> read_releves(const fs::path& path) {
  CsvTable t = read_csv(path);
  std::size_t c_plot = t.column("plot_id");
  std::size_t c_x = t.column("x_m");
  std::size_t c_y = t.column("y_m");
  std::size_t c_cls = t.column("prodrome_class");
  std::size_t c_sp = t.column("species_id");
  std::size_t c_bb = t.column("bb_class");
  std::vector<Releve> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    auto [it, inserted] = index.emplace(row[c_plot], out.size());
    if (inserted) {
      Releve r;
      r.plot_id = row[c_plot];
      r.location = {parse_double(row[c_x]), parse_double(row[c_y])};
      r.prodrome_class = static_cast<int>(parse_int(row[c_cls]));
      if (!std::isfinite(r.location.x) || !std::isfinite(r.location.y)) {
        throw Error(ErrorKind::NonFinite, "plot '" + r.plot_id + "' has a non-finite location");
      }
      out.push_back(std::move(r));
    }
    if (!row[c_sp].empty()) out[it->second].species_covers.emplace_back(row[c_sp], row[c_bb]);
  }
  return out;
}

void write_releves(const fs::path& path, std::span<const Releve> releves) {
  CsvTable t;
  t.header = {"plot_id", "x_m", "y_m", "prodrome_class", "species_id", "bb_class"};
  for (const Releve& r : releves) {
    std::vector<std::string> base{r.plot_id, format_double(r.location.x), format_double(r.location.y),
                                  std::to_string(r.prodrome_class)};
    if (r.species_covers.empty()) {
      auto row = base;
      row.insert(row.end(), {"", ""});
      t.rows.push_back(std::move(row));
    }
    for (const auto& [sp, cls] : r.species_covers) {
      auto row = base;
      row.push_back(sp);
      row.push_back(cls);
      t.rows.push_back(std::move(row));
    }
  }
  write_csv(path, t);
}

std::vector<std::string> species_index_of(std::span<const Releve> releves) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const Releve& r : releves) {
    for (const auto& entry : r.species_covers) {
      if (seen.insert(entry.first).second) out.push_back(entry.first);
    }
  }
  return out;
}

void write_cover_table(const fs::path& path, const CoverTable& table) {
  const Matrix& v = table.cover.values;
  CsvTable t;
  t.header = {"plot_id", "x_m", "y_m", "prodrome_class"};
  t.header.insert(t.header.end(), table.cover.species.begin(), table.cover.species.end());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    std::vector<std::string> row{table.cover.plots[i], format_double(table.locations[i].x),
                                 format_double(table.locations[i].y), std::to_string(table.labels[i])};
    for (double x : v.row(i)) row.push_back(format_double(x));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

CoverTable read_cover_table(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 4 || t.header[0] != "plot_id" || t.header[1] != "x_m" || t.header[2] != "y_m" ||
      t.header[3] != "prodrome_class") {
    throw Error(ErrorKind::BadFormat, path.string() + ": expected plot_id,x_m,y_m,prodrome_class,<species>");
  }
  CoverTable out;
  out.cover.species.assign(t.header.begin() + 4, t.header.end());
  out.cover.values = Matrix(t.rows.size(), out.cover.species.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    out.cover.plots.push_back(row[0]);
    out.locations.push_back({parse_double(row[1]), parse_double(row[2])});
    long long label = parse_int(row[3]);
    if (label < 0) throw Error(ErrorKind::BadLabel, "negative prodrome class");
    out.labels.push_back(static_cast<std::size_t>(label));
    for (std::size_t j = 0; j < out.cover.species.size(); ++j) out.cover.values(i, j) = parse_double(row[4 + j]);
  }
  check_unique(out.cover.plots, path.string());
  return out;
}

std::vector<OccurrenceSet> read_occurrences(const fs::path& path) {
  CsvTable t = read_csv(path);
  std::size_t c_sp = t.column("species_id");
  std::size_t c_x = t.column("x_m");
  std::size_t c_y = t.column("y_m");
  std::size_t c_label = t.column("label");
  std::vector<OccurrenceSet> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    auto [it, inserted] = index.emplace(row[c_sp], out.size());
    if (inserted) out.push_back(OccurrenceSet{row[c_sp], {}, {}});
    Point p{parse_double(row[c_x]), parse_double(row[c_y])};
    long long label = parse_int(row[c_label]);
    if (label == 1) {
      out[it->second].presences.push_back(p);
    } else if (label == 0) {
      out[it->second].candidate_absences.push_back(p);
    } else {
      throw Error(ErrorKind::BadLabel, "occurrence label must be 0 or 1");
    }
  }
  return out;
}

void write_occurrences(const fs::path& path, std::span<const OccurrenceSet> sets) {
  CsvTable t;
  t.header = {"species_id", "x_m", "y_m", "label"};
  for (const OccurrenceSet& s : sets) {
    for (const Point& p : s.presences) t.rows.push_back({s.species_id, format_double(p.x), format_double(p.y), "1"});
    for (const Point& p : s.candidate_absences) {
      t.rows.push_back({s.species_id, format_double(p.x), format_double(p.y), "0"});
    }
  }
  write_csv(path, t);
}

TrophicTable read_soil(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 5 || t.header[0] != "sample_id" || t.header[1] != "x_m" || t.header[2] != "y_m" ||
      t.header[3] != "elevation_m") {
    throw Error(ErrorKind::BadFormat, path.string() + ": expected sample_id,x_m,y_m,elevation_m,<groups>");
  }
  TrophicTable out;
  std::size_t groups = t.header.size() - 4;
  out.abundance = Matrix(t.rows.size(), groups);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    out.sample_ids.push_back(row[0]);
    out.locations.push_back({parse_double(row[1]), parse_double(row[2])});
    out.elevation.push_back(parse_double(row[3]));
    for (std::size_t j = 0; j < groups; ++j) out.abundance(i, j) = parse_double(row[4 + j]);
  }
  return out;
}

void write_soil(const fs::path& path, const TrophicTable& table) {
  CsvTable t;
  t.header = {"sample_id", "x_m", "y_m", "elevation_m"};
  for (std::size_t j = 0; j < table.abundance.cols(); ++j) t.header.push_back("g" + std::to_string(j + 1));
  for (std::size_t i = 0; i < table.abundance.rows(); ++i) {
    std::vector<std::string> row{table.sample_ids[i], format_double(table.locations[i].x),
                                 format_double(table.locations[i].y), format_double(table.elevation[i])};
    for (double v : table.abundance.row(i)) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_split_manifest(const fs::path& path, std::span<const std::string> sample_ids,
                          const FoldAssignment& a) {
  if (sample_ids.size() != a.cells.size()) throw Error(ErrorKind::ShapeMismatch, "split manifest: id count");
  CsvTable t;
  t.header = {"sample_id", "cell_ix", "cell_iy", "fold", "role"};
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    t.rows.push_back({sample_ids[i], std::to_string(a.cells[i].ix), std::to_string(a.cells[i].iy),
                      std::to_string(a.fold[i]), to_string(a.role[i])});
  }
  write_csv(path, t);
}

FoldAssignment read_split_manifest(const fs::path& path, std::vector<std::string>* sample_ids) {
  CsvTable t = read_csv(path);
  std::size_t c_id = t.column("sample_id");
  std::size_t c_ix = t.column("cell_ix");
  std::size_t c_iy = t.column("cell_iy");
  std::size_t c_fold = t.column("fold");
  std::size_t c_role = t.column("role");
  FoldAssignment a;
  int max_fold = -1;
  int active = -1;
  for (const auto& row : t.rows) {
    if (sample_ids) sample_ids->push_back(row[c_id]);
    a.cells.push_back({parse_int(row[c_ix]), parse_int(row[c_iy])});
    int fold = static_cast<int>(parse_int(row[c_fold]));
    a.fold.push_back(fold);
    a.role.push_back(parse_role(row[c_role]));
    max_fold = std::max(max_fold, fold);
    if (a.role.back() == Role::Validation) {
      if (active >= 0 && active != fold) throw Error(ErrorKind::BadFormat, "validation spans several folds");
      active = fold;
    }
  }
  a.n_folds = max_fold + 1;
  a.active_fold = std::max(active, 0);
  return a;
}

void write_labeled_matrix(const fs::path& path, const LabeledMatrix& m) {
  if (m.ids.size() != m.values.rows() || m.columns.size() != m.values.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "labeled matrix: header/shape mismatch");
  }
  CsvTable t;
  t.header = {"id"};
  t.header.insert(t.header.end(), m.columns.begin(), m.columns.end());
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    std::vector<std::string> row{m.ids[i]};
    for (double v : m.values.row(i)) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

LabeledMatrix read_labeled_matrix(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty()) throw Error(ErrorKind::BadFormat, path.string() + ": no header");
  LabeledMatrix m;
  m.columns.assign(t.header.begin() + 1, t.header.end());
  m.values = Matrix(t.rows.size(), m.columns.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    m.ids.push_back(t.rows[i][0]);
    for (std::size_t j = 0; j < m.columns.size(); ++j) m.values(i, j) = parse_double(t.rows[i][j + 1]);
  }
  return m;
}

}  // namespace botaclip
