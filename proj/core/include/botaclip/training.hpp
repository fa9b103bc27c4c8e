#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "botaclip/encoders.hpp"
#include "botaclip/io.hpp"
#include "botaclip/losses.hpp"
#include "botaclip/optimizer.hpp"
#include "botaclip/spatial_cv.hpp"

namespace botaclip {

// Aligned image views and species-cover vectors. views[v].row(i) is view v of
// sample i; every view has one row per sample and unit-norm rows.
struct PairedDataset {
  std::vector<std::string> ids;
  std::vector<Point> locations;
  std::vector<Matrix> views;
  Matrix cover;                     // samples x species, percent cover
  std::vector<std::string> species;
  std::vector<std::size_t> labels;  // prodrome classes

  std::size_t size() const { return cover.rows(); }
  std::size_t image_dim() const { return views.empty() ? 0 : views.front().cols(); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double scl = 0.0;  // validation contrastive (or BCE) component
  double reg = 0.0;  // validation regularizer, before lambda
  double tau = 0.0;
  double b = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  const EpochRecord& best() const;
};

// epoch,train_loss,val_loss,scl,reg,tau,b
void write_train_log_csv(std::ostream& out, const TrainLog& log);
void write_train_log_csv(const fs::path& path, const TrainLog& log);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 1000;
  std::size_t patience = 10;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  bool shuffle = true;
  AdamWConfig optimizer;
};

// ---- Botania pretraining ----------------------------------------------------------

struct BotaniaTrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 300;
  std::size_t patience = 20;
  double lr = 0.3;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct BotaniaResult {
  BotaniaMLP model;
  TrainLog log;  // scl column holds validation cross-entropy, reg is 0
  double val_top1 = 0.0;
  double val_top3 = 0.0;
};

// Plain Adam on the class cross-entropy. Returns the best-validation-loss
// weights. Throws EmptySplit when either index set is empty.
BotaniaResult train_botania(const Matrix& cover, std::span<const std::size_t> labels,
                            std::span<const std::size_t> train, std::span<const std::size_t> validation,
                            const BotaniaDims& dims, const BotaniaTrainConfig& cfg);

// Parameters plus a "botania.meta" block (input, hidden, penultimate,
// classes, dropout).
Checkpoint botania_to_checkpoint(BotaniaMLP& model);
BotaniaMLP botania_from_checkpoint(const Checkpoint& ckpt);

// Fraction of rows whose label is among the k largest logits.
double top_k_accuracy(const Matrix& logits, std::span<const std::size_t> labels, std::size_t k);

// ---- contrastive alignment --------------------------------------------------------

enum class Variant { BotaniaLinear, Mlp, Attention };
std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

struct ArchitectureConfig {
  Variant variant = Variant::BotaniaLinear;
  std::size_t embed_dim = 768;
  BotaniaDims botania;  // input and classes are taken from the data
  std::size_t mlp_tab_hidden = 1024;
  std::size_t mlp_img_hidden = 2600;
  std::size_t attention_heads = 4;
  double adapter_dropout = 0.1;
  double identity_noise_variance = 1e-4;
};

// Image tower, tabular tower and the scalars tau, b.
class BotaclipModel {
public:
  BotaclipModel(const ArchitectureConfig& arch, std::size_t image_dim, std::size_t tab_dim,
                std::size_t n_classes);

  void init(Rng& rng);

  Encoder& image() { return *image_; }
  Encoder& tab() { return *tab_; }
  const Encoder& image() const { return *image_; }
  const Encoder& tab() const { return *tab_; }

  // Null unless the variant is botania-linear.
  BotaniaTower* botania_tower() { return botania_; }

  ScalarsTauB scalars() const;
  ParameterList parameters();
  ParameterList image_parameters() { return image_->parameters(); }

  // Adapted, l2-normalized image embeddings (eval mode).
  Matrix embed_images(const Matrix& images) const { return image_->infer(images); }

  const ArchitectureConfig& architecture() const { return arch_; }
  std::size_t tab_dim() const { return tab_dim_; }
  std::size_t n_classes() const { return n_classes_; }

  Parameter tau{"tau", 1, 1, false};
  Parameter bias{"b", 1, 1, false};

private:
  ArchitectureConfig arch_;
  std::size_t tab_dim_;
  std::size_t n_classes_;
  std::unique_ptr<Encoder> image_;
  std::unique_ptr<Encoder> tab_;
  BotaniaTower* botania_ = nullptr;
};

// Parameters plus a "model.meta" block describing the architecture.
Checkpoint model_to_checkpoint(BotaclipModel& model);
std::unique_ptr<BotaclipModel> model_from_checkpoint(const Checkpoint& ckpt);

struct BotaclipResult {
  std::unique_ptr<BotaclipModel> model;
  TrainLog log;
};

// Trains both towers and tau, b with AdamW on L_SCL + lambda R. Each epoch
// visits every (view, training sample) pair once, one view at a time so a
// batch never holds the same sample twice. Validation uses view 0 in eval
// mode. Image inputs are never modified. With a pretrained Botania the
// botania-linear tabular tower starts from its weights. Throws
// LeakageDetected, EmptySplit.
BotaclipResult train_botaclip(const PairedDataset& data, const FoldAssignment& split,
                              const ArchitectureConfig& arch, const TrainConfig& cfg,
                              const BotaniaMLP* pretrained = nullptr);

// Mean validation-set loss of a model in eval mode (view 0).
LossBreakdown evaluate_botaclip(const BotaclipModel& model, const PairedDataset& data,
                                std::span<const std::size_t> rows, double lambda,
                                std::size_t batch_size = 256);

// ---- supervised baseline ----------------------------------------------------------

struct BotaspConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double lambda = 100.0;
  std::uint64_t seed = 0;
  bool shuffle = true;
  AdamWConfig optimizer;
  std::size_t proj_dim = 768;
  std::size_t hidden = 1536;
  double dropout = 0.4;
};

struct BotaspResult {
  std::unique_ptr<BotaSPModel> model;
  TrainLog log;  // scl column holds the BCE term
};

// embeddings: unit rows. targets: binary samples x species.
BotaspResult train_botasp(const Matrix& embeddings, const Matrix& targets, const FoldAssignment& split,
                          const BotaspConfig& cfg);

// Exported downstream features: the post-GELU hidden layer.
Matrix botasp_features(const BotaSPModel& model, const Matrix& embeddings);

Checkpoint botasp_to_checkpoint(BotaSPModel& model);
std::unique_ptr<BotaSPModel> botasp_from_checkpoint(const Checkpoint& ckpt);

// Mean fraction of shared k-nearest neighbours (cosine) between two
// embeddings of the same rows.
double knn_overlap(const Matrix& a, const Matrix& b, std::size_t k);

}  // namespace botaclip
