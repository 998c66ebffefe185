#include "glarc/params.hpp"

#include <utility>

#include "glarc/errors.hpp"

namespace glarc {

int ParamStore::add(std::string name, Tensor t, ParamKind kind) {
  if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
  int id = static_cast<int>(entries_.size());
  index_.emplace(name, id);
  entries_.push_back(Entry{std::move(name), std::move(t), kind});
  return id;
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

std::int64_t ParamStore::total_numel() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

GradStore::GradStore(const ParamStore& params) {
  grads_.reserve(static_cast<size_t>(params.size()));
  for (int i = 0; i < params.size(); ++i)
    grads_.push_back(Tensor::zeros(params.tensor(i).shape()));
}

void GradStore::zero() {
  for (auto& g : grads_)
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = 0.0;
}

bool GradStore::all_finite() const {
  for (const auto& g : grads_)
    if (!g.all_finite()) return false;
  return true;
}

}  // namespace glarc
