#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glarc/params.hpp"
#include "glarc/tensor.hpp"

namespace glarc {

// Handle to a tape node.
struct Val {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Eagerly evaluated reverse-mode tape for one example. Values are computed
// at node creation; backward() runs the reverse sweep from a scalar seed and
// accumulates parameter gradients into the GradStore bound at construction
// (which may be null for forward-only use).
class Tape {
 public:
  Tape(const ParamStore& params, GradStore* grads)
      : params_(&params), grads_(grads) {}

  // leaves
  Val input(Tensor v);                   // constant, no gradient
  Val param(int param_id);               // whole trainable tensor
  Val table_row(int param_id, int row);  // single embedding-table row

  // linear / elementwise
  Val matvec(Val w, Val x);
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val scale(Val a, double k);
  Val sigmoid(Val a);
  Val tanh(Val a);
  Val max_const(Val a, double floor);  // elementwise max(a_i, floor)

  // attention building blocks
  Val exp_shift(Val scores);  // exp(s_i - max_j s_j); the shift is constant
  Val normalize(Val v);       // v / sum(v)
  Val softmax(Val scores) { return normalize(exp_shift(scores)); }
  Val concat(Val a, Val b);
  Val concat_n(std::span<const Val> parts);
  Val dots(std::span<const Val> rows, Val c);       // out_i = rows_i . c
  Val lincomb(Val coeffs, std::span<const Val> rows);  // sum_i coeffs_i * rows_i

  // scalar losses (length-1 nodes)
  Val cross_entropy_logits(Val logits, int gold);  // logsumexp(z) - z[gold]
  Val bce_sum(Val m, Tensor targets);  // -sum t log m + (1-t) log(1-m), m clamped to [1e-12, 1-1e-12]

  const Tensor& val(Val v) const {
    const Node& n = nodes_[static_cast<size_t>(v.i)];
    return n.ref != nullptr ? *n.ref : n.val;
  }
  double scalar(Val v) const { return val(v)[0]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  void backward(Val seed_scalar);

 private:
  enum class Op : std::uint8_t {
    Input, Param, TableRow, MatVec, Add, Sub, Mul, Scale, Sigmoid, Tanh,
    MaxConst, ExpShift, Normalize, Concat2, ConcatN, Dots, Lincomb,
    CrossEntropyLogits, BceSum,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    int aux_i = 0;          // param id / gold index
    int aux_j = 0;          // table row
    double aux_d = 0.0;     // scale factor / floor / normalize sum
    std::vector<int> many;  // variable-arity parents
    Tensor aux_t;           // BceSum targets / CrossEntropyLogits probs
    const Tensor* ref = nullptr;  // Param nodes alias the store instead of copying
    Tensor val;
    Tensor grad;            // allocated lazily during backward
  };

  Val push(Node n);
  Tensor& grad_of(int idx);
  void backprop_node(int idx);

  const ParamStore* params_;
  GradStore* grads_;
  std::vector<Node> nodes_;
};

// GRU cell parameters as tape nodes; build from a ParamStore (trainable) or
// from plain tensors via Tape::input (forward-only).
struct GruCellVals {
  Val Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
};

// One GRU step: z and r gates, candidate state, convex update.
Val gru_step(Tape& t, const GruCellVals& cell, Val x, Val h_prev);

// Bidirectional scan from zero initial states; returns per-token [h_f || h_b].
std::vector<Val> bigru_scan(Tape& t, const GruCellVals& fwd, const GruCellVals& bwd,
                            std::span<const Val> inputs, int hidden);

}  // namespace glarc
