#include "botaclip/parameter.hpp"

#include "botaclip/error.hpp"

namespace botaclip {

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

ParameterSnapshot snapshot(const ParameterList& params) {
  ParameterSnapshot s;
  s.names.reserve(params.size());
  s.values.reserve(params.size());
  for (const Parameter* p : params) {
    s.names.push_back(p->name);
    s.values.push_back(p->value);
  }
  return s;
}

void restore(const ParameterList& params, const ParameterSnapshot& snap) {
  if (snap.values.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "snapshot does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != snap.names[i] || params[i]->value.rows() != snap.values[i].rows() ||
        params[i]->value.cols() != snap.values[i].cols()) {
      throw Error(ErrorKind::ShapeMismatch, "snapshot entry mismatch for " + params[i]->name);
    }
    params[i]->value = snap.values[i];
  }
}

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

}  // namespace botaclip
