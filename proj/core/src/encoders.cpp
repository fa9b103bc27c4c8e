#include "botaclip/encoders.hpp"

#include "botaclip/error.hpp"

namespace botaclip {

namespace {

void append(ParameterList& dst, const ParameterList& src) { dst.insert(dst.end(), src.begin(), src.end()); }

}  // namespace

// ---- LinearAdapter -------------------------------------------------------------

LinearAdapter::LinearAdapter(const std::string& name, std::size_t in_dim, std::size_t out_dim,
                             bool normalize)
    : linear(name, in_dim, out_dim), normalize_(normalize) {}

Matrix LinearAdapter::forward(const Matrix& x, Mode, Rng&) {
  Matrix y = linear.forward(x);
  return normalize_ ? norm_.forward(y) : y;
}

Matrix LinearAdapter::backward(const Matrix& upstream) {
  Matrix g = normalize_ ? norm_.backward(upstream) : upstream;
  return linear.backward(g);
}

Matrix LinearAdapter::infer(const Matrix& x) const {
  Matrix y = linear.infer(x);
  return normalize_ ? l2_normalize_rows(y) : y;
}

LinearAdapter init_identity_adapter(const std::string& name, std::size_t dim,
                                    double noise_variance, Rng& rng, bool normalize) {
  LinearAdapter a(name, dim, dim, normalize);
  a.linear.init_identity(noise_variance, rng);
  return a;
}

Matrix adapter_forward(const LinearAdapter& adapter, const Matrix& x) { return adapter.infer(x); }

// ---- Botania --------------------------------------------------------------------

BotaniaMLP::BotaniaMLP(const BotaniaDims& dims, const std::string& name)
    : layer1(name + ".layer1", dims.input, dims.hidden),
      layer2(name + ".layer2", dims.hidden, dims.penultimate),
      head(name + ".head", dims.penultimate, dims.classes),
      dims_(dims),
      drop1_(dims.dropout),
      drop2_(dims.dropout) {}

void BotaniaMLP::init(Rng& rng) {
  layer1.init_uniform(rng);
  layer2.init_uniform(rng);
  head.init_uniform(rng);
}

BotaniaOutput BotaniaMLP::forward(const Matrix& cover, Mode mode, Rng& rng, bool with_head,
                                  bool with_penultimate) {
  Matrix a1 = act1_.forward(layer1.forward(cover));
  Matrix a2 = act2_.forward(layer2.forward(drop1_.forward(a1, mode, rng)));
  BotaniaOutput out;
  if (with_penultimate) out.penultimate = penult_norm_.forward(a2);
  penult_cached_ = with_penultimate;
  head_cached_ = with_head;
  if (with_head) out.logits = head.forward(drop2_.forward(a2, mode, rng));
  return out;
}

void BotaniaMLP::backward(const Matrix& d_logits, const Matrix& d_penultimate) {
  Matrix d_a2;
  if (!d_logits.empty()) {
    if (!head_cached_) {
      throw Error(ErrorKind::MissingForwardCache, "botania: head was skipped in forward");
    }
    d_a2 = drop2_.backward(head.backward(d_logits));
  }
  if (!d_penultimate.empty()) {
    if (!penult_cached_) {
      throw Error(ErrorKind::MissingForwardCache, "botania: penultimate was skipped in forward");
    }
    Matrix g = penult_norm_.backward(d_penultimate);
    if (d_a2.empty()) {
      d_a2 = std::move(g);
    } else {
      add_inplace(d_a2, g);
    }
  }
  if (d_a2.empty()) return;
  Matrix d_a1 = drop1_.backward(layer2.backward(act2_.backward(d_a2)));
  layer1.backward(act1_.backward(d_a1), false);
}

BotaniaOutput BotaniaMLP::infer(const Matrix& cover, bool with_head, bool with_penultimate) const {
  Matrix a2 = act2_.infer(layer2.infer(act1_.infer(layer1.infer(cover))));
  BotaniaOutput out;
  if (with_penultimate) out.penultimate = l2_normalize_rows(a2);
  if (with_head) out.logits = head.infer(a2);
  return out;
}

ParameterList BotaniaMLP::parameters() {
  ParameterList out = feature_parameters();
  append(out, head.parameters());
  return out;
}

ParameterList BotaniaMLP::feature_parameters() {
  ParameterList out = layer1.parameters();
  append(out, layer2.parameters());
  return out;
}

BotaniaOutput botania_forward(BotaniaMLP& model, const Matrix& cover, Rng& rng, Mode mode) {
  return model.forward(cover, mode, rng, true);
}

// ---- BotaniaTower ----------------------------------------------------------------

BotaniaTower::BotaniaTower(const BotaniaDims& dims, std::size_t embed_dim)
    : botania(dims), adapter("tab_adapter", dims.penultimate, embed_dim, true) {}

void BotaniaTower::init(Rng& rng) {
  Rng b = rng.substream("botania");
  botania.init(b);
  Rng a = rng.substream("tab_adapter");
  adapter.linear.init_uniform(a);
}

Matrix BotaniaTower::forward(const Matrix& x, Mode mode, Rng& rng) {
  BotaniaOutput feats = botania.forward(x, mode, rng, false);
  return adapter.forward(feats.penultimate, mode, rng);
}

Matrix BotaniaTower::backward(const Matrix& upstream) {
  Matrix d_penult = adapter.backward(upstream);
  botania.backward(Matrix(), d_penult);
  return {};
}

Matrix BotaniaTower::infer(const Matrix& x) const {
  return adapter.infer(botania.infer(x, false).penultimate);
}

ParameterList BotaniaTower::parameters() {
  // The classification head is carried in checkpoints but is not part of
  // the contrastive graph.
  ParameterList out = botania.feature_parameters();
  append(out, adapter.parameters());
  return out;
}

// ---- MlpEncoder ------------------------------------------------------------------

MlpEncoder::MlpEncoder(const std::string& name, std::size_t in_dim, std::size_t hidden,
                       std::size_t out_dim, double dropout)
    : first(name + ".fc1", in_dim, hidden), second(name + ".fc2", hidden, out_dim), drop_(dropout) {}

void MlpEncoder::init(Rng& rng) {
  first.init_uniform(rng);
  second.init_uniform(rng);
}

Matrix MlpEncoder::forward(const Matrix& x, Mode mode, Rng& rng) {
  Matrix h = drop_.forward(act_.forward(first.forward(x)), mode, rng);
  return norm_.forward(second.forward(h));
}

Matrix MlpEncoder::backward(const Matrix& upstream) {
  Matrix g = second.backward(norm_.backward(upstream));
  return first.backward(act_.backward(drop_.backward(g)));
}

Matrix MlpEncoder::infer(const Matrix& x) const {
  return l2_normalize_rows(second.infer(act_.infer(first.infer(x))));
}

ParameterList MlpEncoder::parameters() {
  ParameterList out = first.parameters();
  append(out, second.parameters());
  return out;
}

// ---- AttentionEncoder ----------------------------------------------------------------

AttentionEncoder::AttentionEncoder(const std::string& name, std::size_t in_dim, std::size_t hidden,
                                   std::size_t out_dim, std::size_t heads, double dropout)
    : reduce(name + ".reduce", in_dim, hidden),
      norm1(name + ".norm1", hidden),
      attention(name + ".mha", hidden, heads),
      norm2(name + ".norm2", hidden),
      project(name + ".proj", hidden, out_dim),
      drop_(dropout) {}

void AttentionEncoder::init(Rng& rng) {
  reduce.init_uniform(rng);
  attention.init_uniform(rng);
  project.init_uniform(rng);
}

Matrix AttentionEncoder::forward(const Matrix& x, Mode mode, Rng& rng) {
  Matrix h = reduce.forward(x);
  Matrix attended = attention.forward(norm1.forward(h));
  add_inplace(attended, h);
  Matrix a = act_.forward(norm2.forward(attended));
  return norm_.forward(project.forward(drop_.forward(a, mode, rng)));
}

Matrix AttentionEncoder::backward(const Matrix& upstream) {
  Matrix g = project.backward(norm_.backward(upstream));
  Matrix d_res = norm2.backward(act_.backward(drop_.backward(g)));
  Matrix d_h = norm1.backward(attention.backward(d_res));
  add_inplace(d_h, d_res);
  return reduce.backward(d_h);
}

Matrix AttentionEncoder::infer(const Matrix& x) const {
  Matrix h = reduce.infer(x);
  Matrix attended = attention.infer(norm1.infer(h));
  add_inplace(attended, h);
  return l2_normalize_rows(project.infer(act_.infer(norm2.infer(attended))));
}

ParameterList AttentionEncoder::parameters() {
  ParameterList out = reduce.parameters();
  append(out, norm1.parameters());
  append(out, attention.parameters());
  append(out, norm2.parameters());
  append(out, project.parameters());
  return out;
}

// ---- BotaSP -----------------------------------------------------------------------

BotaSPModel::BotaSPModel(std::size_t in_dim, std::size_t species, std::size_t proj_dim,
                         std::size_t hidden_dim, double dropout)
    : projection("botasp.proj", in_dim, proj_dim),
      hidden("botasp.hidden", proj_dim, hidden_dim),
      head("botasp.head", hidden_dim, species),
      drop_(dropout) {}

void BotaSPModel::init(Rng& rng) {
  projection.init_uniform(rng);
  hidden.init_uniform(rng);
  head.init_uniform(rng);
}

BotaSPOutput BotaSPModel::forward(const Matrix& x, Mode mode, Rng& rng) {
  BotaSPOutput out;
  out.projected = proj_norm_.forward(projection.forward(x));
  out.features = act_.forward(hidden.forward(out.projected));
  out.logits = head.forward(drop_.forward(out.features, mode, rng));
  return out;
}

void BotaSPModel::backward(const Matrix& d_projected, const Matrix& d_logits) {
  Matrix dz = hidden.backward(act_.backward(drop_.backward(head.backward(d_logits))));
  if (!d_projected.empty()) add_inplace(dz, d_projected);
  projection.backward(proj_norm_.backward(dz), false);
}

BotaSPOutput BotaSPModel::infer(const Matrix& x) const {
  BotaSPOutput out;
  out.projected = l2_normalize_rows(projection.infer(x));
  out.features = act_.infer(hidden.infer(out.projected));
  out.logits = head.infer(out.features);
  return out;
}

ParameterList BotaSPModel::parameters() {
  ParameterList out = projection.parameters();
  append(out, hidden.parameters());
  append(out, head.parameters());
  return out;
}

}  // namespace botaclip
