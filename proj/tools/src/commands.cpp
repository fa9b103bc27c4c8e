#include "botaclip_cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "botaclip/error.hpp"
#include "botaclip/evaluation.hpp"
#include "botaclip/io.hpp"
#include "botaclip/stats.hpp"
#include "botaclip/synthetic.hpp"
#include "botaclip/training.hpp"
#include "botaclip_cli/config.hpp"
#include "botaclip_cli/manifest.hpp"

namespace botaclip::cli {

namespace {

// Options every subcommand shares.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON run config (flags override it)")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set train.lambda=0")->take_all();
  cmd->add_option("--seed", c.seed, "Seed for every stage (config key 'seed')");
}

// Flag values become overrides appended after --set ones, so flags win.
template <typename T>
void flag_override(std::vector<std::string>& out, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  out.push_back(key + "=" + json(*v).dump());
}

RunConfig config_of(const Common& c, std::vector<std::string> extra = {}) {
  std::vector<std::string> all = c.overrides;
  flag_override(all, "seed", c.seed);
  all.insert(all.end(), extra.begin(), extra.end());
  return resolve_config(c.config_path, all);
}

struct PointTable {
  std::vector<std::string> ids;
  std::vector<Point> points;
};

// Any CSV whose first column holds ids and that has x_m and y_m columns.
PointTable read_points(const fs::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty()) throw Error(ErrorKind::BadFormat, path.string() + ": empty header");
  std::size_t cx = t.column("x_m");
  std::size_t cy = t.column("y_m");
  PointTable out;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw Error(ErrorKind::BadFormat, path.string() + ": ragged row");
    out.ids.push_back(row[0]);
    out.points.push_back({parse_double(row[cx]), parse_double(row[cy])});
  }
  return out;
}

std::unordered_map<std::string, std::size_t> index_of(std::span<const std::string> ids, const std::string& what) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!out.emplace(ids[i], i).second) throw Error(ErrorKind::DuplicateEntry, what + ": duplicate id '" + ids[i] + "'");
  }
  return out;
}

// Position in `source` of every id in `wanted`.
std::vector<std::size_t> positions(std::span<const std::string> wanted, std::span<const std::string> source,
                                   const std::string& what) {
  auto idx = index_of(source, what);
  std::vector<std::size_t> out;
  out.reserve(wanted.size());
  for (const auto& id : wanted) {
    auto it = idx.find(id);
    if (it == idx.end()) throw Error(ErrorKind::BadFormat, what + ": no entry for id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

EmbeddingFile load_with_ids(const fs::path& path, bool normalize) {
  EmbeddingFile f = load_embeddings(path, normalize);
  if (f.ids.empty()) throw Error(ErrorKind::BadFormat, path.string() + ": embedding file carries no row ids");
  return f;
}

FoldAssignment reorder_assignment(const FoldAssignment& a, const std::vector<std::size_t>& pos) {
  FoldAssignment out;
  out.n_folds = a.n_folds;
  out.cell_size = a.cell_size;
  out.active_fold = a.active_fold;
  for (std::size_t p : pos) {
    out.cells.push_back(a.cells[p]);
    out.fold.push_back(a.fold[p]);
    out.role.push_back(a.role[p]);
  }
  return out;
}

// From a split manifest when given, else built from the points.
FoldAssignment resolve_split(const std::string& split_path, std::span<const std::string> ids,
                             std::span<const Point> points, const RunConfig& cfg) {
  if (!split_path.empty()) {
    std::vector<std::string> split_ids;
    FoldAssignment a = read_split_manifest(split_path, &split_ids);
    FoldAssignment out = reorder_assignment(a, positions(ids, split_ids, split_path));
    out.cell_size = cfg.cell_size;
    return out;
  }
  if (points.size() != ids.size()) throw Error(ErrorKind::BadConfig, "a split needs --split or --points");
  Rng rng = Rng(cfg.seed).substream("split");
  return make_fold_assignment(points, cfg.folds, cfg.fold, rng, cfg.cell_size);
}

void print_log_tail(const TrainLog& log) {
  const EpochRecord& b = log.best();
  std::cout << "epochs run: " << log.epochs.size() << (log.stopped_early ? " (early stop)" : "")
            << ", best epoch " << log.best_epoch << ": val_loss " << b.val_loss << " (scl " << b.scl
            << ", reg " << b.reg << "), tau " << b.tau << ", b " << b.b << '\n';
}

fs::path default_log(const std::string& log, const fs::path& out) {
  if (!log.empty()) return log;
  fs::path p = out;
  p += ".log.csv";
  return p;
}

// ---- subcommands ---------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string out;
  std::optional<std::size_t> pairs, img_dim, latent_dim, species, views;
  std::optional<double> noise;
};

void cmd_synth(const SynthArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "synth.pairs", a.pairs);
  flag_override(extra, "synth.img_dim", a.img_dim);
  flag_override(extra, "synth.latent_dim", a.latent_dim);
  flag_override(extra, "synth.n_species", a.species);
  flag_override(extra, "synth.views", a.views);
  flag_override(extra, "synth.noise", a.noise);
  RunConfig cfg = config_of(a.common, extra);
  SyntheticDataset data = generate_synthetic(cfg.synth);
  write_synthetic(a.out, data);
  write_manifest(manifest_path_for(a.out), {"synth", {}, {{"dataset", a.out}}}, cfg);
  std::cout << "wrote " << data.pairs.size() << " pairs x " << data.pairs.views.size() << " views ("
            << data.pairs.image_dim() << "-d images, " << data.pairs.species.size() << " species) to " << a.out
            << '\n';
}

struct PrepArgs {
  Common common;
  std::string releves;
  std::string out;
  std::size_t min_presences = 0;
};

void cmd_prep(const PrepArgs& a) {
  RunConfig cfg = config_of(a.common);
  std::vector<Releve> releves = read_releves(a.releves);
  std::vector<std::string> species = species_index_of(releves);
  CoverBuild built = build_cover_matrix(releves, species);
  if (a.min_presences > 0) {
    std::vector<std::size_t> keep = filter_by_support(binarize_presence(built.cover.values), a.min_presences);
    Matrix kept(built.cover.values.rows(), keep.size());
    std::vector<std::string> names;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      names.push_back(built.cover.species[keep[j]]);
      for (std::size_t i = 0; i < kept.rows(); ++i) kept(i, j) = built.cover.values(i, keep[j]);
    }
    built.cover.values = std::move(kept);
    built.cover.species = std::move(names);
  }
  fs::path out = a.out;
  fs::create_directories(out);
  write_cover_table(out / "cover.csv", {built.cover, built.locations, built.labels});
  CsvTable labels{{"plot_id", "prodrome_class"}, {}};
  for (std::size_t i = 0; i < built.labels.size(); ++i) {
    labels.rows.push_back({built.cover.plots[i], std::to_string(built.labels[i])});
  }
  write_csv(out / "labels.csv", labels);
  write_manifest(manifest_path_for(out), {"prep", {{"releves", a.releves}}, {{"prepared", out}}}, cfg);
  std::cout << "cover matrix " << built.cover.values.rows() << " plots x " << built.cover.values.cols()
            << " species -> " << (out / "cover.csv").string() << '\n';
}

struct SplitArgs {
  Common common;
  std::string points;
  std::string out;
  std::optional<int> folds, fold;
  std::optional<double> cell_size;
};

void cmd_split(const SplitArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "split.folds", a.folds);
  flag_override(extra, "split.fold", a.fold);
  flag_override(extra, "split.cell_size", a.cell_size);
  RunConfig cfg = config_of(a.common, extra);
  PointTable pts = read_points(a.points);
  FoldAssignment fa = resolve_split("", pts.ids, pts.points, cfg);
  SplitIndices s = split_from_roles(fa.role);
  LeakageReport leak = audit_leakage(pts.points, fa.cells, s, fa.cell_size);
  if (leak.cell_violations || leak.distance_violations) {
    throw Error(ErrorKind::LeakageDetected, "split audit found train/validation pairs closer than the buffer");
  }
  write_split_manifest(a.out, pts.ids, fa);
  write_manifest(manifest_path_for(a.out), {"split", {{"points", a.points}}, {{"split", a.out}}}, cfg);
  std::cout << "fold " << fa.active_fold << "/" << fa.n_folds << ": train " << s.train.size() << ", validation "
            << s.validation.size() << ", excluded " << s.excluded.size() << "; min train-val distance "
            << leak.min_distance << " m\n";
}

struct TrainBotaniaArgs {
  Common common;
  std::string data, split, points, out, log;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
};

void cmd_train_botania(const TrainBotaniaArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "botania.max_epochs", a.epochs);
  flag_override(extra, "botania.lr", a.lr);
  RunConfig cfg = config_of(a.common, extra);
  fs::path cover_path = fs::path(a.data) / "cover.csv";
  CoverTable table = read_cover_table(cover_path);
  FoldAssignment fa = resolve_split(a.split, table.cover.plots, table.locations, cfg);
  SplitIndices s = split_from_roles(fa.role);
  BotaniaDims dims = cfg.arch.botania;
  dims.classes = 0;
  for (std::size_t y : table.labels) dims.classes = std::max(dims.classes, y + 1);
  BotaniaResult r = train_botania(table.cover.values, table.labels, s.train, s.validation, dims, cfg.botania);
  save_checkpoint(a.out, botania_to_checkpoint(r.model));
  fs::path log = default_log(a.log, a.out);
  write_train_log_csv(log, r.log);
  Manifest m{"train-botania", {{"cover", cover_path}}, {{"checkpoint", a.out}, {"log", log}}};
  if (!a.split.empty()) m.inputs.push_back({"split", a.split});
  write_manifest(manifest_path_for(a.out), m, cfg);
  print_log_tail(r.log);
  std::cout << "validation top-1 " << r.val_top1 << ", top-3 " << r.val_top3 << '\n';
}

struct TrainBotaclipArgs {
  Common common;
  std::string data, split, botania, out, log;
  std::optional<std::string> variant;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
};

void cmd_train_botaclip(const TrainBotaclipArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "model.variant", a.variant);
  flag_override(extra, "train.lambda", a.lambda);
  flag_override(extra, "train.max_epochs", a.epochs);
  RunConfig cfg = config_of(a.common, extra);
  PairedDataset data = load_paired_dataset(a.data, cfg.normalize_on_load);
  FoldAssignment fa = resolve_split(a.split, data.ids, data.locations, cfg);
  Manifest m{"train-botaclip", {{"dataset", a.data}}, {}};
  if (!a.split.empty()) m.inputs.push_back({"split", a.split});

  std::optional<BotaniaMLP> pretrained;
  ArchitectureConfig arch = cfg.arch;
  if (!a.botania.empty()) {
    pretrained = botania_from_checkpoint(load_checkpoint(a.botania));
    arch.botania = pretrained->dims();
    m.inputs.push_back({"botania", a.botania});
    try {
      pretrained->infer(data.cover, false);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroRow) throw;
      throw Error(ErrorKind::ZeroRow, "pretrained Botania has samples whose penultimate activations are all zero (" +
                                          std::string(e.what()) + "); retrain it with a smaller botania.lr");
    }
  }
  BotaclipResult r = train_botaclip(data, fa, arch, cfg.train, pretrained ? &*pretrained : nullptr);
  save_checkpoint(a.out, model_to_checkpoint(*r.model));
  fs::path log = default_log(a.log, a.out);
  write_train_log_csv(log, r.log);
  m.outputs = {{"checkpoint", a.out}, {"log", log}};
  write_manifest(manifest_path_for(a.out), m, cfg);
  std::cout << "variant " << to_string(arch.variant) << ", lambda " << cfg.train.lambda << '\n';
  print_log_tail(r.log);
}

struct TrainBotaspArgs {
  Common common;
  std::string embeddings, targets, split, points, out, log;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
};

void cmd_train_botasp(const TrainBotaspArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "botasp.lambda", a.lambda);
  flag_override(extra, "botasp.max_epochs", a.epochs);
  RunConfig cfg = config_of(a.common, extra);
  LabeledMatrix targets = read_labeled_matrix(a.targets);
  EmbeddingFile emb = load_with_ids(a.embeddings, cfg.normalize_on_load);
  Matrix x = select_rows(emb.values, positions(targets.ids, emb.ids, a.embeddings));
  std::vector<Point> pts;
  if (!a.points.empty()) {
    PointTable table = read_points(a.points);
    for (std::size_t p : positions(targets.ids, table.ids, a.points)) pts.push_back(table.points[p]);
  }
  FoldAssignment fa = resolve_split(a.split, targets.ids, pts, cfg);
  BotaspResult r = train_botasp(x, targets.values, fa, cfg.botasp);
  save_checkpoint(a.out, botasp_to_checkpoint(*r.model));
  fs::path log = default_log(a.log, a.out);
  write_train_log_csv(log, r.log);
  Manifest m{"train-botasp", {{"embeddings", a.embeddings}, {"targets", a.targets}},
             {{"checkpoint", a.out}, {"log", log}}};
  if (!a.split.empty()) m.inputs.push_back({"split", a.split});
  if (!a.points.empty()) m.inputs.push_back({"points", a.points});
  write_manifest(manifest_path_for(a.out), m, cfg);
  print_log_tail(r.log);
}

struct EmbedArgs {
  Common common;
  std::string model, in, out;
};

void cmd_embed(const EmbedArgs& a) {
  RunConfig cfg = config_of(a.common);
  Checkpoint ckpt = load_checkpoint(a.model);
  EmbeddingFile input = load_embeddings(a.in, cfg.normalize_on_load);
  Matrix out;
  if (ckpt.find("botasp.meta")) {
    out = botasp_features(*botasp_from_checkpoint(ckpt), input.values);
  } else {
    out = model_from_checkpoint(ckpt)->embed_images(input.values);
  }
  save_embeddings(a.out, out, input.ids);
  write_manifest(manifest_path_for(a.out), {"embed", {{"model", a.model}, {"embeddings", a.in}}, {{"embeddings", a.out}}},
                 cfg);
  std::cout << "embedded " << out.rows() << " rows -> " << out.cols() << "-d (" << a.out << ")\n";
}

struct EvalArgs {
  Common common;
  std::string task, features, out, targets, occurrences, soil, split, points;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> trees;
};

void print_report_means(const MetricReport& r) {
  std::cout << r.task << ": " << r.units.size() << " units";
  for (std::size_t j = 0; j < r.metrics.size(); ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.units.size(); ++i) {
      if (std::isfinite(r.values(i, j))) {
        sum += r.values(i, j);
        ++n;
      }
    }
    std::cout << ", mean " << r.metrics[j] << " " << (n ? sum / static_cast<double>(n) : std::nan("")) << " (n=" << n
              << ")";
  }
  std::cout << '\n';
}

void cmd_eval(const EvalArgs& a) {
  std::vector<std::string> extra;
  flag_override(extra, "metrics.n_trees", a.trees);
  RunConfig cfg = config_of(a.common, extra);
  EvalConfig ec = cfg.eval;
  ec.threads = a.threads.value_or(default_thread_count());
  EmbeddingFile feat = load_with_ids(a.features, cfg.normalize_on_load);
  Manifest m{"eval", {{"features", a.features}}, {}};
  if (!a.split.empty()) m.inputs.push_back({"split", a.split});
  if (!a.points.empty()) m.inputs.push_back({"points", a.points});

  auto points_for = [&](std::span<const std::string> ids) {
    std::vector<Point> pts;
    if (a.points.empty()) return pts;
    PointTable table = read_points(a.points);
    for (std::size_t p : positions(ids, table.ids, a.points)) pts.push_back(table.points[p]);
    return pts;
  };

  MetricReport report;
  if (a.task == "plant") {
    if (a.targets.empty()) throw Error(ErrorKind::BadConfig, "--task plant needs --targets");
    LabeledMatrix targets = read_labeled_matrix(a.targets);
    Matrix x = select_rows(feat.values, positions(targets.ids, feat.ids, a.features));
    FoldAssignment fa = resolve_split(a.split, targets.ids, points_for(targets.ids), cfg);
    report = evaluate_presence_task(x, targets.values, targets.columns, split_from_roles(fa.role), ec);
    m.inputs.push_back({"targets", a.targets});
  } else if (a.task == "butterfly") {
    if (a.occurrences.empty() || a.points.empty()) {
      throw Error(ErrorKind::BadConfig, "--task butterfly needs --occurrences and --points");
    }
    std::vector<Point> pts = points_for(feat.ids);
    FoldAssignment fa = resolve_split(a.split, feat.ids, pts, cfg);
    report = evaluate_occurrence_task(feat.values, pts, fa.role, read_occurrences(a.occurrences), ec);
    m.inputs.push_back({"occurrences", a.occurrences});
  } else if (a.task == "soil") {
    if (a.soil.empty()) throw Error(ErrorKind::BadConfig, "--task soil needs --soil");
    TrophicTable soil = read_soil(a.soil);
    Matrix x = select_rows(feat.values, positions(soil.sample_ids, feat.ids, a.features));
    report = evaluate_abundance_task(x, soil, ec);
    m.inputs.push_back({"soil", a.soil});
  } else {
    throw Error(ErrorKind::BadConfig, "unknown task '" + a.task + "' (plant|butterfly|soil)");
  }
  write_metric_report(a.out, report);
  m.outputs = {{"report", a.out}};
  write_manifest(manifest_path_for(a.out), m, cfg);
  print_report_means(report);
}

struct ClusterArgs {
  Common common;
  std::string embeddings, labels, column = "label", out;
};

void cmd_cluster(const ClusterArgs& a) {
  RunConfig cfg = config_of(a.common);
  EmbeddingFile emb = load_with_ids(a.embeddings, cfg.normalize_on_load);
  CsvTable t = read_csv(a.labels);
  std::size_t col = 0;
  if (std::find(t.header.begin(), t.header.end(), a.column) != t.header.end()) {
    col = t.column(a.column);
  } else if (t.header.size() == 2) {
    col = 1;
  } else {
    t.column(a.column);  // throws with the column name
  }
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& row : t.rows) {
    ids.push_back(row.at(0));
    labels.push_back(static_cast<int>(parse_int(row.at(col))));
  }
  Matrix x = select_rows(emb.values, positions(ids, emb.ids, a.embeddings));
  ClusterIndices ci = cluster_indices(x, labels);
  std::cout << "davies_bouldin " << format_double(ci.davies_bouldin) << "\ncalinski_harabasz "
            << format_double(ci.calinski_harabasz) << '\n';
  if (!a.out.empty()) {
    write_csv(a.out, {{"davies_bouldin", "calinski_harabasz"},
                      {{format_double(ci.davies_bouldin), format_double(ci.calinski_harabasz)}}});
    write_manifest(manifest_path_for(a.out),
                   {"cluster-metrics", {{"embeddings", a.embeddings}, {"labels", a.labels}}, {{"indices", a.out}}}, cfg);
  }
}

struct StatsArgs {
  Common common;
  std::vector<std::string> reports;
  std::string metric = "tss";
  bool lower_is_better = false;
  double alpha = 0.05;
  std::string out;
};

void cmd_stats(const StatsArgs& a) {
  RunConfig cfg = config_of(a.common);
  if (a.reports.size() < 2) throw Error(ErrorKind::BadConfig, "stats needs at least two --report NAME=PATH");
  std::vector<std::string> names;
  std::vector<std::map<std::string, double>> columns;
  Manifest m{"stats", {}, {}};
  for (const auto& spec : a.reports) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::BadConfig, "--report expects NAME=PATH, got '" + spec + "'");
    std::string name = spec.substr(0, eq);
    fs::path path = spec.substr(eq + 1);
    MetricReport r = read_metric_report(path);
    std::size_t j = r.metric_index(a.metric);
    std::map<std::string, double> col;
    for (std::size_t i = 0; i < r.units.size(); ++i) {
      if (std::isfinite(r.values(i, j))) col[r.units[i]] = r.values(i, j);
    }
    names.push_back(name);
    columns.push_back(std::move(col));
    m.inputs.push_back({name, path});
  }
  // Units scored by every model.
  std::vector<std::string> units;
  for (const auto& [unit, v] : columns.front()) {
    bool everywhere = std::all_of(columns.begin(), columns.end(), [&](const auto& c) { return c.count(unit) > 0; });
    if (everywhere) units.push_back(unit);
  }
  if (units.size() < 2) throw Error(ErrorKind::EmptyData, "stats: fewer than two units are scored by every report");
  Matrix scores(units.size(), names.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) scores(i, j) = columns[j].at(units[i]);
  }
  AblationReport report = ablation_report(names, scores, !a.lower_is_better, a.alpha);
  std::cout << units.size() << " shared units, metric " << a.metric << '\n';
  write_report_table(std::cout, report);
  if (!a.out.empty()) {
    std::ostringstream os;
    write_report_csv(os, report);
    write_text(a.out, os.str());
    m.outputs = {{"report", a.out}};
    write_manifest(manifest_path_for(a.out), m, cfg);
  }
}

void report_error(const std::string& kind, int code, const std::string& message) {
  std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Contrastive alignment of image embeddings with species-cover vectors"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic paired dataset");
  add_common(c_synth, synth.common);
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--pairs", synth.pairs, "Number of samples (synth.pairs)");
  c_synth->add_option("--img-dim", synth.img_dim, "Image embedding width (synth.img_dim)");
  c_synth->add_option("--latent-dim", synth.latent_dim, "Latent dimension (synth.latent_dim)");
  c_synth->add_option("--species", synth.species, "Species columns in the cover matrix (synth.n_species)");
  c_synth->add_option("--views", synth.views, "Image views per sample (synth.views)");
  c_synth->add_option("--noise", synth.noise, "Image noise scale (synth.noise)");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep", "Build the cover matrix and labels from releves.csv");
  add_common(c_prep, prep.common);
  c_prep->add_option("--releves", prep.releves, "Long-format releves CSV")->required()->check(CLI::ExistingFile);
  c_prep->add_option("--out", prep.out, "Output directory (cover.csv, labels.csv)")->required();
  c_prep->add_option("--min-presences", prep.min_presences, "Drop species with fewer presences");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Write a buffered spatial-CV manifest");
  add_common(c_split, split.common);
  c_split->add_option("--points", split.points, "CSV with an id column first and x_m, y_m")->required()->check(CLI::ExistingFile);
  c_split->add_option("--out", split.out, "Split manifest CSV")->required();
  c_split->add_option("--folds", split.folds, "Number of folds (split.folds)");
  c_split->add_option("--fold", split.fold, "Validation fold, 0-based (split.fold)");
  c_split->add_option("--cell-size", split.cell_size, "Grid cell size in meters (split.cell_size)");

  TrainBotaniaArgs tb;
  auto* c_tb = app.add_subcommand("train-botania", "Pretrain the Botania cover classifier");
  add_common(c_tb, tb.common);
  c_tb->add_option("--data", tb.data, "Directory holding cover.csv")->required()->check(CLI::ExistingDirectory);
  c_tb->add_option("--split", tb.split, "Split manifest (default: built from the config)")->check(CLI::ExistingFile);
  c_tb->add_option("--out", tb.out, "Checkpoint path")->required();
  c_tb->add_option("--log", tb.log, "Training log CSV (default <out>.log.csv)");
  c_tb->add_option("--epochs", tb.epochs, "botania.max_epochs");
  c_tb->add_option("--lr", tb.lr, "botania.lr");

  TrainBotaclipArgs tc;
  auto* c_tc = app.add_subcommand("train-botaclip", "Align image and cover towers with the sigmoid loss");
  add_common(c_tc, tc.common);
  c_tc->add_option("--data", tc.data, "Directory with cover.csv and image_view<v>.emb")->required()->check(CLI::ExistingDirectory);
  c_tc->add_option("--split", tc.split, "Split manifest (default: built from the config)")->check(CLI::ExistingFile);
  c_tc->add_option("--botania", tc.botania, "Pretrained Botania checkpoint")->check(CLI::ExistingFile);
  c_tc->add_option("--out", tc.out, "Checkpoint path")->required();
  c_tc->add_option("--log", tc.log, "Training log CSV (default <out>.log.csv)");
  c_tc->add_option("--variant", tc.variant, "botania-linear | mlp | attention (model.variant)");
  c_tc->add_option("--lambda", tc.lambda, "Regularizer weight (train.lambda)");
  c_tc->add_option("--epochs", tc.epochs, "train.max_epochs");

  TrainBotaspArgs ts;
  auto* c_ts = app.add_subcommand("train-botasp", "Train the supervised species baseline");
  add_common(c_ts, ts.common);
  c_ts->add_option("--embeddings", ts.embeddings, "Image embeddings with ids")->required()->check(CLI::ExistingFile);
  c_ts->add_option("--targets", ts.targets, "Presence matrix CSV (id,<species...>)")->required()->check(CLI::ExistingFile);
  c_ts->add_option("--split", ts.split, "Split manifest")->check(CLI::ExistingFile);
  c_ts->add_option("--points", ts.points, "Locations CSV, used when no --split is given")->check(CLI::ExistingFile);
  c_ts->add_option("--out", ts.out, "Checkpoint path")->required();
  c_ts->add_option("--log", ts.log, "Training log CSV (default <out>.log.csv)");
  c_ts->add_option("--lambda", ts.lambda, "botasp.lambda");
  c_ts->add_option("--epochs", ts.epochs, "botasp.max_epochs");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Apply a trained image tower (or BotaSP) to embeddings");
  add_common(c_embed, embed.common);
  c_embed->add_option("--model", embed.model, "train-botaclip or train-botasp checkpoint")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--in", embed.in, "Input embedding file")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--out", embed.out, "Output embedding file")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Fit random forests per species or group and score them");
  add_common(c_eval, ev.common);
  c_eval->add_option("--task", ev.task, "plant | butterfly | soil")->required();
  c_eval->add_option("--features", ev.features, "Embedding file with ids")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.out, "Metric report CSV")->required();
  c_eval->add_option("--targets", ev.targets, "plant: presence matrix CSV")->check(CLI::ExistingFile);
  c_eval->add_option("--occurrences", ev.occurrences, "butterfly: occurrences CSV")->check(CLI::ExistingFile);
  c_eval->add_option("--soil", ev.soil, "soil: trophic table CSV")->check(CLI::ExistingFile);
  c_eval->add_option("--split", ev.split, "Split manifest")->check(CLI::ExistingFile);
  c_eval->add_option("--points", ev.points, "Locations CSV (id first, x_m, y_m)")->check(CLI::ExistingFile);
  c_eval->add_option("--threads", ev.threads, "Worker threads (default RA_THREADS or all cores)");
  c_eval->add_option("--trees", ev.trees, "metrics.n_trees");

  ClusterArgs cl;
  auto* c_cl = app.add_subcommand("cluster-metrics", "Davies-Bouldin and Calinski-Harabasz indices");
  add_common(c_cl, cl.common);
  c_cl->add_option("--embeddings", cl.embeddings, "Embedding file with ids")->required()->check(CLI::ExistingFile);
  c_cl->add_option("--labels", cl.labels, "CSV: id first, integer label column")->required()->check(CLI::ExistingFile);
  c_cl->add_option("--column", cl.column, "Label column name (default 'label'; a 2-column file uses its second)");
  c_cl->add_option("--out", cl.out, "CSV output");

  StatsArgs st;
  auto* c_st = app.add_subcommand("stats", "Friedman and Holm-corrected Wilcoxon tests across reports");
  add_common(c_st, st.common);
  c_st->add_option("--report", st.reports, "NAME=PATH, one per model")->required();
  c_st->add_option("--metric", st.metric, "Metric column to compare");
  c_st->add_flag("--lower-is-better", st.lower_is_better, "Smaller metric values are better (e.g. mae)");
  c_st->add_option("--alpha", st.alpha, "Friedman significance level");
  c_st->add_option("--out", st.out, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return kExitOk;
    report_error("Usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    if (c_synth->parsed()) cmd_synth(synth);
    else if (c_prep->parsed()) cmd_prep(prep);
    else if (c_split->parsed()) cmd_split(split);
    else if (c_tb->parsed()) cmd_train_botania(tb);
    else if (c_tc->parsed()) cmd_train_botaclip(tc);
    else if (c_ts->parsed()) cmd_train_botasp(ts);
    else if (c_embed->parsed()) cmd_embed(embed);
    else if (c_eval->parsed()) cmd_eval(ev);
    else if (c_cl->parsed()) cmd_cluster(cl);
    else if (c_st->parsed()) cmd_stats(st);
  } catch (const Error& e) {
    int code = e.kind() == ErrorKind::BadConfig ? kExitUsage : is_numeric(e.kind()) ? kExitNumeric : kExitData;
    report_error(std::string(to_string(e.kind())), code, e.what());
    return code;
  } catch (const json::exception& e) {
    report_error("BadConfig", kExitUsage, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error("Io", kExitData, e.what());
    return kExitData;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace botaclip::cli
