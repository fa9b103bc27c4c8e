#include "botaclip_cli/config.hpp"

#include <optional>
#include <set>

#include "botaclip/error.hpp"
#include "botaclip/io.hpp"

namespace botaclip::cli {

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw Error(ErrorKind::BadConfig, where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw Error(ErrorKind::BadConfig, "");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw Error(ErrorKind::BadConfig, "");
        if (std::is_unsigned_v<T> && it->template get<long long>() < 0) throw Error(ErrorKind::BadConfig, "");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw Error(ErrorKind::BadConfig, "");
      } else {
        if (!it->is_string()) throw Error(ErrorKind::BadConfig, "");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadConfig, where(key) + ": wrong type " + std::string(it->type_name()));
    }
  }

  // null or absent leaves the optional empty
  void get_optional(const char* key, std::optional<std::size_t>& out) {
    auto it = obj_.find(key);
    if (it != obj_.end() && it->is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    std::size_t v = 0;
    bool present = it != obj_.end();
    get(key, v);
    if (present) out = v;
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = obj_.find(key);
    return Section(it == obj_.end() ? empty : *it, where(key));
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(ErrorKind::BadConfig, "unknown config key '" + where(it.key()) + "'");
    }
  }

private:
  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json optimizer_json(const AdamWConfig& o) {
  return {{"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}, {"weight_decay", o.weight_decay}};
}

void read_optimizer(Section s, AdamWConfig& o) {
  s.get("lr", o.lr);
  s.get("beta1", o.beta1);
  s.get("beta2", o.beta2);
  s.get("eps", o.eps);
  s.get("weight_decay", o.weight_decay);
  s.finish();
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["normalize_on_load"] = c.normalize_on_load;
  j["split"] = {{"folds", c.folds}, {"fold", c.fold}, {"cell_size", c.cell_size}};
  const ArchitectureConfig& a = c.arch;
  j["model"] = {{"variant", to_string(a.variant)},
                {"embed_dim", a.embed_dim},
                {"botania_hidden", a.botania.hidden},
                {"botania_penultimate", a.botania.penultimate},
                {"botania_dropout", a.botania.dropout},
                {"mlp_tab_hidden", a.mlp_tab_hidden},
                {"mlp_img_hidden", a.mlp_img_hidden},
                {"attention_heads", a.attention_heads},
                {"adapter_dropout", a.adapter_dropout},
                {"identity_noise_variance", a.identity_noise_variance}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience},
                {"lambda", c.train.lambda},
                {"shuffle", c.train.shuffle},
                {"optimizer", optimizer_json(c.train.optimizer)}};
  j["botania"] = {{"batch_size", c.botania.batch_size},
                  {"max_epochs", c.botania.max_epochs},
                  {"patience", c.botania.patience},
                  {"lr", c.botania.lr},
                  {"shuffle", c.botania.shuffle}};
  j["botasp"] = {{"batch_size", c.botasp.batch_size},
                 {"max_epochs", c.botasp.max_epochs},
                 {"patience", c.botasp.patience},
                 {"lambda", c.botasp.lambda},
                 {"shuffle", c.botasp.shuffle},
                 {"proj_dim", c.botasp.proj_dim},
                 {"hidden", c.botasp.hidden},
                 {"dropout", c.botasp.dropout},
                 {"optimizer", optimizer_json(c.botasp.optimizer)}};
  const EvalConfig& e = c.eval;
  j["metrics"] = {{"threshold", e.threshold},
                  {"n_trees", e.forest.n_trees},
                  {"min_samples_split", e.forest.min_samples_split},
                  {"max_depth", e.forest.max_depth ? json(*e.forest.max_depth) : json(nullptr)},
                  {"max_features", e.forest.max_features ? json(*e.forest.max_features) : json(nullptr)},
                  {"boyce_windows", e.boyce.windows},
                  {"boyce_width_fraction", e.boyce.width_fraction},
                  {"soil_folds", e.soil_folds},
                  {"soil_strata", e.soil_strata}};
  const SyntheticConfig& s = c.synth;
  j["synth"] = {{"pairs", s.pairs},
                {"latent_dim", s.latent_dim},
                {"img_dim", s.img_dim},
                {"n_species", s.n_species},
                {"views", s.views},
                {"noise", s.noise},
                {"sites_per_cell", s.sites_per_cell},
                {"cell_stride", s.cell_stride},
                {"cell_share", s.cell_share},
                {"sparsity", s.sparsity},
                {"n_classes", s.n_classes},
                {"target_species", s.target_species},
                {"butterfly_species", s.butterfly_species},
                {"soil_groups", s.soil_groups}};
  return j;
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.get("seed", c.seed);
  root.get("normalize_on_load", c.normalize_on_load);
  {
    Section s = root.child("split");
    s.get("folds", c.folds);
    s.get("fold", c.fold);
    s.get("cell_size", c.cell_size);
    s.finish();
  }
  {
    Section s = root.child("model");
    std::string variant = to_string(c.arch.variant);
    s.get("variant", variant);
    try {
      c.arch.variant = parse_variant(variant);
    } catch (const Error& e) {
      throw Error(ErrorKind::BadConfig, std::string("model.variant: ") + e.what());
    }
    s.get("embed_dim", c.arch.embed_dim);
    s.get("botania_hidden", c.arch.botania.hidden);
    s.get("botania_penultimate", c.arch.botania.penultimate);
    s.get("botania_dropout", c.arch.botania.dropout);
    s.get("mlp_tab_hidden", c.arch.mlp_tab_hidden);
    s.get("mlp_img_hidden", c.arch.mlp_img_hidden);
    s.get("attention_heads", c.arch.attention_heads);
    s.get("adapter_dropout", c.arch.adapter_dropout);
    s.get("identity_noise_variance", c.arch.identity_noise_variance);
    s.finish();
  }
  {
    Section s = root.child("train");
    s.get("batch_size", c.train.batch_size);
    s.get("max_epochs", c.train.max_epochs);
    s.get("patience", c.train.patience);
    s.get("lambda", c.train.lambda);
    s.get("shuffle", c.train.shuffle);
    read_optimizer(s.child("optimizer"), c.train.optimizer);
    s.finish();
  }
  {
    Section s = root.child("botania");
    s.get("batch_size", c.botania.batch_size);
    s.get("max_epochs", c.botania.max_epochs);
    s.get("patience", c.botania.patience);
    s.get("lr", c.botania.lr);
    s.get("shuffle", c.botania.shuffle);
    s.finish();
  }
  {
    Section s = root.child("botasp");
    s.get("batch_size", c.botasp.batch_size);
    s.get("max_epochs", c.botasp.max_epochs);
    s.get("patience", c.botasp.patience);
    s.get("lambda", c.botasp.lambda);
    s.get("shuffle", c.botasp.shuffle);
    s.get("proj_dim", c.botasp.proj_dim);
    s.get("hidden", c.botasp.hidden);
    s.get("dropout", c.botasp.dropout);
    read_optimizer(s.child("optimizer"), c.botasp.optimizer);
    s.finish();
  }
  {
    Section s = root.child("metrics");
    s.get("threshold", c.eval.threshold);
    s.get("n_trees", c.eval.forest.n_trees);
    s.get("min_samples_split", c.eval.forest.min_samples_split);
    s.get_optional("max_depth", c.eval.forest.max_depth);
    s.get_optional("max_features", c.eval.forest.max_features);
    s.get("boyce_windows", c.eval.boyce.windows);
    s.get("boyce_width_fraction", c.eval.boyce.width_fraction);
    s.get("soil_folds", c.eval.soil_folds);
    s.get("soil_strata", c.eval.soil_strata);
    s.finish();
  }
  {
    Section s = root.child("synth");
    SyntheticConfig& y = c.synth;
    s.get("pairs", y.pairs);
    s.get("latent_dim", y.latent_dim);
    s.get("img_dim", y.img_dim);
    s.get("n_species", y.n_species);
    s.get("views", y.views);
    s.get("noise", y.noise);
    s.get("sites_per_cell", y.sites_per_cell);
    s.get("cell_stride", y.cell_stride);
    s.get("cell_share", y.cell_share);
    s.get("sparsity", y.sparsity);
    s.get("n_classes", y.n_classes);
    s.get("target_species", y.target_species);
    s.get("butterfly_species", y.butterfly_species);
    s.get("soil_groups", y.soil_groups);
    s.finish();
  }
  root.finish();

  if (c.folds < 2 || c.fold < 0 || c.fold >= c.folds) throw Error(ErrorKind::BadConfig, "split: need folds >= 2 and 0 <= fold < folds");
  if (!(c.cell_size > 0.0)) throw Error(ErrorKind::BadConfig, "split.cell_size must be positive");
  if (c.train.batch_size == 0 || c.botania.batch_size == 0 || c.botasp.batch_size == 0) {
    throw Error(ErrorKind::BadConfig, "batch_size must be >= 1");
  }
  if (c.train.patience == 0 || c.botania.patience == 0 || c.botasp.patience == 0) {
    throw Error(ErrorKind::BadConfig, "patience must be >= 1");
  }
  if (c.train.lambda < 0.0 || c.botasp.lambda < 0.0) throw Error(ErrorKind::BadConfig, "lambda must be >= 0");
  if (c.eval.forest.n_trees == 0) throw Error(ErrorKind::BadConfig, "metrics.n_trees must be >= 1");
  c.train.seed = c.botania.seed = c.botasp.seed = c.eval.seed = c.synth.seed = c.seed;
  c.synth.cell_size = c.cell_size;
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::BadConfig, "override '" + assignment + "' is not key=value");
  std::string key = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  static const json schema = to_json(RunConfig{});
  const json* node = &schema;
  json* target = &doc;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw Error(ErrorKind::BadConfig, "unknown config key '" + key + "'");
    node = &(*node)[part];
    if (!target->is_object()) *target = json::object();
    target = &(*target)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *target = value;
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    doc = json::parse(read_text(path), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::BadConfig, path + ": not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace botaclip::cli
