#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "glarc/tensor.hpp"

namespace glarc {

// What a tensor is, for the optimizer's max-norm projection: only Weight
// matrices (recurrent/classifier rows) are constrained; embeddings and
// biases are exempt.
enum class ParamKind { Embedding, Weight, Bias };

// Named, ordered collection of trainable tensors. Order is the registration
// order and is part of the checkpoint contract.
class ParamStore {
 public:
  int add(std::string name, Tensor t, ParamKind kind);

  int find(const std::string& name) const;  // -1 if absent
  int size() const { return static_cast<int>(entries_.size()); }

  Tensor& tensor(int id) { return entries_[static_cast<size_t>(id)].tensor; }
  const Tensor& tensor(int id) const { return entries_[static_cast<size_t>(id)].tensor; }
  const std::string& name(int id) const { return entries_[static_cast<size_t>(id)].name; }
  ParamKind kind(int id) const { return entries_[static_cast<size_t>(id)].kind; }

  std::int64_t total_numel() const;

 private:
  struct Entry {
    std::string name;
    Tensor tensor;
    ParamKind kind;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// Gradient accumulator with the same shapes and ordering as a ParamStore.
class GradStore {
 public:
  GradStore() = default;
  explicit GradStore(const ParamStore& params);

  void zero();
  int size() const { return static_cast<int>(grads_.size()); }
  Tensor& tensor(int id) { return grads_[static_cast<size_t>(id)]; }
  const Tensor& tensor(int id) const { return grads_[static_cast<size_t>(id)]; }

  bool all_finite() const;

 private:
  std::vector<Tensor> grads_;
};

}  // namespace glarc
