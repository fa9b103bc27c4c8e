#include "botaclip/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::size_t end = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::span<const std::size_t> rows, bool shuffle, Rng rng) {
  std::vector<std::size_t> order(rows.begin(), rows.end());
  if (shuffle) rng.shuffle(std::span<std::size_t>(order));
  return order;
}

void check_batch_config(std::size_t batch_size, std::size_t patience) {
  if (batch_size == 0) throw Error(ErrorKind::BadConfig, "batch_size must be >= 1");
  if (patience == 0) throw Error(ErrorKind::BadConfig, "patience must be >= 1");
}

SplitIndices checked_split(const FoldAssignment& split, std::size_t n, const char* what) {
  if (split.role.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": split covers " + std::to_string(split.role.size()) +
                                              " samples, data has " + std::to_string(n));
  }
  SplitIndices s = split_from_roles(split.role);
  if (!split.cells.empty()) require_no_leakage(split, s.train);
  if (s.train.empty()) throw Error(ErrorKind::EmptySplit, std::string(what) + ": no training samples");
  if (s.validation.empty()) throw Error(ErrorKind::EmptySplit, std::string(what) + ": no validation samples");
  return s;
}

void copy_linear(Linear& dst, const Linear& src) {
  if (dst.weight.value.rows() != src.weight.value.rows() || dst.weight.value.cols() != src.weight.value.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "pretrained " + src.weight.name + " has a different shape");
  }
  dst.weight.value = src.weight.value;
  dst.bias.value = src.bias.value;
}

constexpr std::size_t kMetaFields = 13;

}  // namespace

// ---- TrainLog ---------------------------------------------------------------------

const EpochRecord& TrainLog::best() const {
  if (best_epoch == 0 || best_epoch > epochs.size()) throw Error(ErrorKind::EmptyData, "train log has no epochs");
  return epochs[best_epoch - 1];
}

void write_train_log_csv(std::ostream& out, const TrainLog& log) {
  out << "epoch,train_loss,val_loss,scl,reg,tau,b\n";
  for (const EpochRecord& r : log.epochs) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
        << format_double(r.scl) << ',' << format_double(r.reg) << ',' << format_double(r.tau) << ','
        << format_double(r.b) << '\n';
  }
}

void write_train_log_csv(const fs::path& path, const TrainLog& log) {
  std::ostringstream os;
  write_train_log_csv(os, log);
  write_text(path, os.str());
}

// ---- Botania ------------------------------------------------------------------------

Checkpoint botania_to_checkpoint(BotaniaMLP& model) {
  const BotaniaDims& d = model.dims();
  Checkpoint ckpt;
  ckpt.add("botania.meta", Matrix(1, 5,
                                  {static_cast<double>(d.input), static_cast<double>(d.hidden),
                                   static_cast<double>(d.penultimate), static_cast<double>(d.classes), d.dropout}));
  for (Parameter* p : model.parameters()) ckpt.add(p->name, p->value);
  return ckpt;
}

BotaniaMLP botania_from_checkpoint(const Checkpoint& ckpt) {
  const Matrix* meta = ckpt.find("botania.meta");
  if (!meta || meta->size() != 5) throw Error(ErrorKind::BadFormat, "checkpoint has no botania.meta block");
  auto count = [&](std::size_t i) { return static_cast<std::size_t>((*meta)(0, i)); };
  BotaniaDims d{count(0), count(1), count(2), count(3), (*meta)(0, 4)};
  BotaniaMLP model(d);
  load_parameters(model.parameters(), ckpt, true);
  return model;
}

double top_k_accuracy(const Matrix& logits, std::span<const std::size_t> labels, std::size_t k) {
  if (logits.rows() != labels.size() || logits.rows() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "top_k_accuracy: one label per row");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    double target = row[labels[i]];
    auto above = static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [&](double v) { return v > target; }));
    if (above < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

namespace {

double botania_val_loss(const BotaniaMLP& model, const Matrix& cover, std::span<const std::size_t> labels,
                        std::span<const std::size_t> rows, std::size_t batch_size) {
  double sum = 0.0;
  for (const auto& batch : make_batches({rows.begin(), rows.end()}, batch_size)) {
    Matrix logits = model.infer(select_rows(cover, batch), true, false).logits;
    std::vector<std::size_t> y;
    for (std::size_t i : batch) y.push_back(labels[i]);
    sum += cross_entropy_batch(logits, y).loss * static_cast<double>(batch.size());
  }
  return sum / static_cast<double>(rows.size());
}

}  // namespace

BotaniaResult train_botania(const Matrix& cover, std::span<const std::size_t> labels,
                            std::span<const std::size_t> train, std::span<const std::size_t> validation,
                            const BotaniaDims& dims_in, const BotaniaTrainConfig& cfg) {
  check_batch_config(cfg.batch_size, cfg.patience);
  if (labels.size() != cover.rows()) throw Error(ErrorKind::ShapeMismatch, "botania: one label per row");
  if (train.empty()) throw Error(ErrorKind::EmptySplit, "botania: no training rows");
  if (validation.empty()) throw Error(ErrorKind::EmptySplit, "botania: no validation rows");
  BotaniaDims dims = dims_in;
  dims.input = cover.cols();
  for (std::size_t y : labels) {
    if (y >= dims.classes) throw Error(ErrorKind::BadLabel, "botania: label " + std::to_string(y) + " out of range");
  }

  Rng root(cfg.seed);
  BotaniaResult result{BotaniaMLP(dims), {}, 0.0, 0.0};
  BotaniaMLP& model = result.model;
  Rng init = root.substream("init");
  model.init(init);
  ParameterList params = model.parameters();
  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = 0.0;
  opt_cfg.decoupled = false;
  AdamW opt(params, opt_cfg);
  EarlyStopper stopper(cfg.patience);
  ParameterSnapshot best = snapshot(params);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng = root.substream("epoch", epoch);
    Rng drop = erng.substream("dropout");
    double sum = 0.0;
    for (const auto& batch : make_batches(epoch_order(train, cfg.shuffle, erng.substream("shuffle")), cfg.batch_size)) {
      std::vector<std::size_t> y;
      for (std::size_t i : batch) y.push_back(labels[i]);
      zero_grads(params);
      BotaniaOutput out = model.forward(select_rows(cover, batch), Mode::Train, drop, true, false);
      CrossEntropyResult ce = cross_entropy_batch(out.logits, y);
      model.backward(ce.d_logits, Matrix());
      opt.step();
      sum += ce.loss * static_cast<double>(batch.size());
    }
    double val = botania_val_loss(model, cover, labels, validation, cfg.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum / static_cast<double>(train.size());
    rec.val_loss = val;
    rec.scl = val;
    result.log.epochs.push_back(rec);
    if (!std::isfinite(val)) break;
    if (stopper.update(val)) best = snapshot(params);
    if (stopper.should_stop()) {
      result.log.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  restore(params, best);
  result.log.best_epoch = stopper.best_epoch();
  if (result.log.best_epoch == 0) throw Error(ErrorKind::NonFinite, "botania: validation loss never finite");

  Matrix logits = model.infer(select_rows(cover, validation), true, false).logits;
  std::vector<std::size_t> y;
  for (std::size_t i : validation) y.push_back(labels[i]);
  result.val_top1 = top_k_accuracy(logits, y, 1);
  result.val_top3 = top_k_accuracy(logits, y, 3);
  return result;
}

// ---- BotaclipModel ------------------------------------------------------------------

std::string to_string(Variant v) {
  switch (v) {
    case Variant::BotaniaLinear: return "botania-linear";
    case Variant::Mlp: return "mlp";
    case Variant::Attention: return "attention";
  }
  return "unknown";
}

Variant parse_variant(std::string_view s) {
  if (s == "botania-linear") return Variant::BotaniaLinear;
  if (s == "mlp") return Variant::Mlp;
  if (s == "attention") return Variant::Attention;
  throw Error(ErrorKind::BadConfig, "unknown variant '" + std::string(s) + "' (botania-linear|mlp|attention)");
}

BotaclipModel::BotaclipModel(const ArchitectureConfig& arch, std::size_t image_dim, std::size_t tab_dim,
                             std::size_t n_classes)
    : arch_(arch), tab_dim_(tab_dim), n_classes_(n_classes) {
  switch (arch.variant) {
    case Variant::BotaniaLinear: {
      if (image_dim != arch.embed_dim) {
        throw Error(ErrorKind::BadConfig, "botania-linear uses a square image adapter: image dim " +
                                              std::to_string(image_dim) + " != embed_dim " +
                                              std::to_string(arch.embed_dim));
      }
      image_ = std::make_unique<LinearAdapter>("img_adapter", image_dim, arch.embed_dim, true);
      BotaniaDims dims = arch.botania;
      dims.input = tab_dim;
      dims.classes = n_classes;
      auto tower = std::make_unique<BotaniaTower>(dims, arch.embed_dim);
      botania_ = tower.get();
      tab_ = std::move(tower);
      break;
    }
    case Variant::Mlp:
      image_ = std::make_unique<MlpEncoder>("img_mlp", image_dim, arch.mlp_img_hidden, arch.embed_dim,
                                            arch.adapter_dropout);
      tab_ = std::make_unique<MlpEncoder>("tab_mlp", tab_dim, arch.mlp_tab_hidden, arch.embed_dim,
                                          arch.adapter_dropout);
      break;
    case Variant::Attention:
      image_ = std::make_unique<MlpEncoder>("img_mlp", image_dim, arch.mlp_img_hidden, arch.embed_dim,
                                            arch.adapter_dropout);
      tab_ = std::make_unique<AttentionEncoder>("tab_attn", tab_dim, arch.mlp_tab_hidden, arch.embed_dim,
                                                arch.attention_heads, arch.adapter_dropout);
      break;
  }
  ScalarsTauB defaults;
  tau.value(0, 0) = defaults.tau;
  bias.value(0, 0) = defaults.b;
}

void BotaclipModel::init(Rng& rng) {
  Rng image_rng = rng.substream("image");
  Rng tab_rng = rng.substream("tab");
  if (auto* adapter = dynamic_cast<LinearAdapter*>(image_.get())) {
    adapter->linear.init_identity(arch_.identity_noise_variance, image_rng);
  } else if (auto* mlp = dynamic_cast<MlpEncoder*>(image_.get())) {
    mlp->init(image_rng);
  }
  if (botania_) {
    botania_->init(tab_rng);
  } else if (auto* mlp = dynamic_cast<MlpEncoder*>(tab_.get())) {
    mlp->init(tab_rng);
  } else if (auto* attn = dynamic_cast<AttentionEncoder*>(tab_.get())) {
    attn->init(tab_rng);
  }
  ScalarsTauB defaults;
  tau.value(0, 0) = defaults.tau;
  bias.value(0, 0) = defaults.b;
}

ScalarsTauB BotaclipModel::scalars() const {
  ScalarsTauB s;
  s.tau = tau.value(0, 0);
  s.b = bias.value(0, 0);
  return s;
}

ParameterList BotaclipModel::parameters() {
  ParameterList out = image_->parameters();
  for (Parameter* p : tab_->parameters()) out.push_back(p);
  out.push_back(&tau);
  out.push_back(&bias);
  return out;
}

Checkpoint model_to_checkpoint(BotaclipModel& model) {
  const ArchitectureConfig& a = model.architecture();
  Checkpoint ckpt;
  ckpt.add("model.meta",
           Matrix(1, kMetaFields,
                  {static_cast<double>(a.variant), static_cast<double>(model.image().input_dim()),
                   static_cast<double>(model.tab_dim()), static_cast<double>(model.n_classes()),
                   static_cast<double>(a.embed_dim), static_cast<double>(a.botania.hidden),
                   static_cast<double>(a.botania.penultimate), a.botania.dropout,
                   static_cast<double>(a.mlp_tab_hidden), static_cast<double>(a.mlp_img_hidden),
                   static_cast<double>(a.attention_heads), a.adapter_dropout, a.identity_noise_variance}));
  for (Parameter* p : model.parameters()) ckpt.add(p->name, p->value);
  if (BotaniaTower* tower = model.botania_tower()) {
    for (Parameter* p : tower->botania.head.parameters()) ckpt.add(p->name, p->value);
  }
  return ckpt;
}

std::unique_ptr<BotaclipModel> model_from_checkpoint(const Checkpoint& ckpt) {
  const Matrix* meta = ckpt.find("model.meta");
  if (!meta || meta->size() != kMetaFields) throw Error(ErrorKind::BadFormat, "checkpoint has no model.meta block");
  auto field = [&](std::size_t i) { return (*meta)(0, i); };
  auto count = [&](std::size_t i) { return static_cast<std::size_t>(field(i)); };
  ArchitectureConfig a;
  int variant = static_cast<int>(field(0));
  if (variant < 0 || variant > 2) throw Error(ErrorKind::BadFormat, "model.meta: unknown variant");
  a.variant = static_cast<Variant>(variant);
  a.embed_dim = count(4);
  a.botania.hidden = count(5);
  a.botania.penultimate = count(6);
  a.botania.dropout = field(7);
  a.mlp_tab_hidden = count(8);
  a.mlp_img_hidden = count(9);
  a.attention_heads = count(10);
  a.adapter_dropout = field(11);
  a.identity_noise_variance = field(12);
  auto model = std::make_unique<BotaclipModel>(a, count(1), count(2), count(3));
  load_parameters(model->parameters(), ckpt, true);
  if (BotaniaTower* tower = model->botania_tower()) load_parameters(tower->botania.head.parameters(), ckpt, false);
  return model;
}

// ---- contrastive training ------------------------------------------------------------

LossBreakdown evaluate_botaclip(const BotaclipModel& model, const PairedDataset& data,
                                std::span<const std::size_t> rows, double lambda, std::size_t batch_size) {
  if (rows.empty()) throw Error(ErrorKind::EmptySplit, "evaluate_botaclip: no rows");
  if (data.views.empty()) throw Error(ErrorKind::EmptyData, "evaluate_botaclip: no image views");
  BotaclipObjective objective(lambda);
  LossBreakdown total;
  for (const auto& batch : make_batches({rows.begin(), rows.end()}, batch_size)) {
    Matrix img = select_rows(data.views.front(), batch);
    Matrix z_img = model.image().infer(img);
    Matrix z_tab = model.tab().infer(select_rows(data.cover, batch));
    LossBreakdown lb = objective.forward(img, z_img, z_tab, model.scalars());
    double w = static_cast<double>(batch.size());
    total.total += lb.total * w;
    total.scl += lb.scl * w;
    total.reg += lb.reg * w;
  }
  double n = static_cast<double>(rows.size());
  total.total /= n;
  total.scl /= n;
  total.reg /= n;
  return total;
}

BotaclipResult train_botaclip(const PairedDataset& data, const FoldAssignment& split,
                              const ArchitectureConfig& arch, const TrainConfig& cfg,
                              const BotaniaMLP* pretrained) {
  check_batch_config(cfg.batch_size, cfg.patience);
  if (cfg.lambda < 0.0) throw Error(ErrorKind::BadConfig, "lambda must be >= 0");
  std::size_t n = data.size();
  if (data.views.empty()) throw Error(ErrorKind::EmptyData, "every pair needs at least one image view");
  for (const Matrix& v : data.views) {
    if (v.rows() != n || v.cols() != data.image_dim()) {
      throw Error(ErrorKind::ShapeMismatch, "image views must all be samples x image_dim");
    }
  }
  SplitIndices s = checked_split(split, n, "train_botaclip");

  std::size_t n_classes = arch.botania.classes;
  for (std::size_t y : data.labels) n_classes = std::max(n_classes, y + 1);
  if (pretrained) n_classes = pretrained->dims().classes;

  BotaclipResult result;
  result.model = std::make_unique<BotaclipModel>(arch, data.image_dim(), data.cover.cols(), n_classes);
  BotaclipModel& model = *result.model;
  Rng root(cfg.seed);
  Rng init = root.substream("init");
  model.init(init);
  if (pretrained) {
    BotaniaTower* tower = model.botania_tower();
    if (!tower) throw Error(ErrorKind::BadConfig, "a pretrained Botania needs the botania-linear variant");
    copy_linear(tower->botania.layer1, pretrained->layer1);
    copy_linear(tower->botania.layer2, pretrained->layer2);
    copy_linear(tower->botania.head, pretrained->head);
  }

  ParameterList params = model.parameters();
  AdamW opt(params, cfg.optimizer);
  BotaclipObjective objective(cfg.lambda);
  EarlyStopper stopper(cfg.patience);
  ParameterSnapshot best = snapshot(params);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng = root.substream("epoch", epoch);
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
      Rng vrng = erng.substream("view", v);
      Rng drop = vrng.substream("dropout");
      auto order = epoch_order(s.train, cfg.shuffle, vrng.substream("shuffle"));
      for (const auto& batch : make_batches(std::move(order), cfg.batch_size)) {
        Matrix img = select_rows(data.views[v], batch);
        zero_grads(params);
        Matrix z_img = model.image().forward(img, Mode::Train, drop);
        Matrix z_tab = model.tab().forward(select_rows(data.cover, batch), Mode::Train, drop);
        LossBreakdown lb = objective.forward(img, z_img, z_tab, model.scalars());
        BotaclipObjective::Gradients g = objective.backward();
        model.image().backward(g.z_img);
        model.tab().backward(g.z_tab);
        model.tau.grad(0, 0) = g.tau;
        model.bias.grad(0, 0) = g.b;
        opt.step();
        double& t = model.tau.value(0, 0);
        t = std::clamp(t, ScalarsTauB::kTauMin, ScalarsTauB::kTauMax);
        sum += lb.total * static_cast<double>(batch.size());
        seen += batch.size();
      }
    }
    LossBreakdown val = evaluate_botaclip(model, data, s.validation, cfg.lambda, cfg.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum / static_cast<double>(seen);
    rec.val_loss = val.total;
    rec.scl = val.scl;
    rec.reg = val.reg;
    rec.tau = model.tau.value(0, 0);
    rec.b = model.bias.value(0, 0);
    result.log.epochs.push_back(rec);
    if (!std::isfinite(val.total)) throw Error(ErrorKind::NonFinite, "validation loss is not finite");
    if (stopper.update(val.total)) best = snapshot(params);
    if (stopper.should_stop()) {
      result.log.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  restore(params, best);
  result.log.best_epoch = stopper.best_epoch();
  return result;
}

// ---- supervised baseline -------------------------------------------------------------

namespace {

LossBreakdown botasp_eval(const BotaSPModel& model, const Matrix& x, const Matrix& y,
                          std::span<const std::size_t> rows, double lambda, std::size_t batch_size) {
  BotaspObjective objective(lambda);
  LossBreakdown total;
  for (const auto& batch : make_batches({rows.begin(), rows.end()}, batch_size)) {
    Matrix xb = select_rows(x, batch);
    BotaSPOutput out = model.infer(xb);
    LossBreakdown lb = objective.forward(out.logits, select_rows(y, batch), xb, out.projected);
    double w = static_cast<double>(batch.size());
    total.total += lb.total * w;
    total.scl += lb.scl * w;
    total.reg += lb.reg * w;
  }
  double n = static_cast<double>(rows.size());
  total.total /= n;
  total.scl /= n;
  total.reg /= n;
  return total;
}

}  // namespace

BotaspResult train_botasp(const Matrix& embeddings, const Matrix& targets, const FoldAssignment& split,
                          const BotaspConfig& cfg) {
  check_batch_config(cfg.batch_size, cfg.patience);
  if (embeddings.rows() != targets.rows()) throw Error(ErrorKind::ShapeMismatch, "botasp: one target row per sample");
  for (double v : targets.values()) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorKind::BadLabel, "botasp: targets must be 0/1");
  }
  SplitIndices s = checked_split(split, embeddings.rows(), "train_botasp");

  BotaspResult result;
  result.model = std::make_unique<BotaSPModel>(embeddings.cols(), targets.cols(), cfg.proj_dim, cfg.hidden,
                                               cfg.dropout);
  BotaSPModel& model = *result.model;
  Rng root(cfg.seed);
  Rng init = root.substream("init");
  model.init(init);
  ParameterList params = model.parameters();
  AdamW opt(params, cfg.optimizer);
  BotaspObjective objective(cfg.lambda);
  EarlyStopper stopper(cfg.patience);
  ParameterSnapshot best = snapshot(params);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng = root.substream("epoch", epoch);
    Rng drop = erng.substream("dropout");
    double sum = 0.0;
    for (const auto& batch :
         make_batches(epoch_order(s.train, cfg.shuffle, erng.substream("shuffle")), cfg.batch_size)) {
      Matrix xb = select_rows(embeddings, batch);
      zero_grads(params);
      BotaSPOutput out = model.forward(xb, Mode::Train, drop);
      LossBreakdown lb = objective.forward(out.logits, select_rows(targets, batch), xb, out.projected);
      BotaspObjective::Gradients g = objective.backward();
      model.backward(g.z_new, g.logits);
      opt.step();
      sum += lb.total * static_cast<double>(batch.size());
    }
    LossBreakdown val = botasp_eval(model, embeddings, targets, s.validation, cfg.lambda, cfg.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum / static_cast<double>(s.train.size());
    rec.val_loss = val.total;
    rec.scl = val.scl;
    rec.reg = val.reg;
    result.log.epochs.push_back(rec);
    if (!std::isfinite(val.total)) throw Error(ErrorKind::NonFinite, "validation loss is not finite");
    if (stopper.update(val.total)) best = snapshot(params);
    if (stopper.should_stop()) {
      result.log.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  restore(params, best);
  result.log.best_epoch = stopper.best_epoch();
  return result;
}

Matrix botasp_features(const BotaSPModel& model, const Matrix& embeddings) {
  return model.infer(embeddings).features;
}

Checkpoint botasp_to_checkpoint(BotaSPModel& model) {
  Checkpoint ckpt;
  ckpt.add("botasp.meta", Matrix(1, 4, {static_cast<double>(model.projection.in_dim()),
                                        static_cast<double>(model.head.out_dim()),
                                        static_cast<double>(model.projection.out_dim()),
                                        static_cast<double>(model.hidden.out_dim())}));
  for (Parameter* p : model.parameters()) ckpt.add(p->name, p->value);
  return ckpt;
}

std::unique_ptr<BotaSPModel> botasp_from_checkpoint(const Checkpoint& ckpt) {
  const Matrix* meta = ckpt.find("botasp.meta");
  if (!meta || meta->size() != 4) throw Error(ErrorKind::BadFormat, "checkpoint has no botasp.meta block");
  auto count = [&](std::size_t i) { return static_cast<std::size_t>((*meta)(0, i)); };
  auto model = std::make_unique<BotaSPModel>(count(0), count(1), count(2), count(3));
  load_parameters(model->parameters(), ckpt, true);
  return model;
}

// ---- neighbourhood overlap ------------------------------------------------------------

double knn_overlap(const Matrix& a, const Matrix& b, std::size_t k) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::ShapeMismatch, "knn_overlap: row counts differ");
  std::size_t n = a.rows();
  if (k == 0 || k >= n) throw Error(ErrorKind::BadConfig, "knn_overlap: need 1 <= k < rows");
  auto neighbours = [&](const Matrix& m) {
    Matrix unit = l2_normalize_rows(m);
    Matrix sim = gram(unit, unit);
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::iota(order.begin(), order.end(), 0);
      order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t x, std::size_t y) {
                          return sim(i, x) > sim(i, y) || (sim(i, x) == sim(i, y) && x < y);
                        });
      out[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(out[i].begin(), out[i].end());
      order.resize(n);
    }
    return out;
  };
  auto na = neighbours(a);
  auto nb = neighbours(b);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> common;
    std::set_intersection(na[i].begin(), na[i].end(), nb[i].begin(), nb[i].end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

}  // namespace botaclip
