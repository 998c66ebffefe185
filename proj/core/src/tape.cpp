#include "glarc/tape.hpp"

#include <algorithm>
#include <cmath>

#include "glarc/errors.hpp"

namespace glarc {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw UsageError(msg);
}

}  // namespace

Val Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Val{static_cast<int>(nodes_.size()) - 1};
}

Val Tape::input(Tensor v) {
  Node n;
  n.op = Op::Input;
  n.val = std::move(v);
  return push(std::move(n));
}

Val Tape::param(int param_id) {
  Node n;
  n.op = Op::Param;
  n.aux_i = param_id;
  n.ref = &params_->tensor(param_id);
  return push(std::move(n));
}

Val Tape::table_row(int param_id, int row) {
  const Tensor& table = params_->tensor(param_id);
  require(table.rank() == 2, "table_row: parameter is not a matrix");
  require(row >= 0 && row < table.dim(0), "table_row: row out of range");
  Node n;
  n.op = Op::TableRow;
  n.aux_i = param_id;
  n.aux_j = row;
  n.val = Tensor({table.cols()});
  std::copy(table.row(row), table.row(row) + table.cols(), n.val.data());
  return push(std::move(n));
}

Val Tape::matvec(Val w, Val x) {
  const Tensor& W = val(w);
  const Tensor& v = val(x);
  Node n;
  n.op = Op::MatVec;
  n.a = w.i;
  n.b = x.i;
  n.val = glarc::matvec(W, v);
  return push(std::move(n));
}

Val Tape::add(Val a, Val b) {
  Node n;
  n.op = Op::Add;
  n.a = a.i;
  n.b = b.i;
  n.val = glarc::add(val(a), val(b));
  return push(std::move(n));
}

Val Tape::sub(Val a, Val b) {
  Node n;
  n.op = Op::Sub;
  n.a = a.i;
  n.b = b.i;
  n.val = glarc::sub(val(a), val(b));
  return push(std::move(n));
}

Val Tape::mul(Val a, Val b) {
  Node n;
  n.op = Op::Mul;
  n.a = a.i;
  n.b = b.i;
  n.val = glarc::mul(val(a), val(b));
  return push(std::move(n));
}

Val Tape::scale(Val a, double k) {
  Node n;
  n.op = Op::Scale;
  n.a = a.i;
  n.aux_d = k;
  n.val = glarc::scale(val(a), k);
  return push(std::move(n));
}

Val Tape::sigmoid(Val a) {
  const Tensor& x = val(a);
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.i;
  n.val = Tensor(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) n.val[i] = glarc::sigmoid(x[i]);
  return push(std::move(n));
}

Val Tape::tanh(Val a) {
  const Tensor& x = val(a);
  Node n;
  n.op = Op::Tanh;
  n.a = a.i;
  n.val = Tensor(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) n.val[i] = std::tanh(x[i]);
  return push(std::move(n));
}

Val Tape::max_const(Val a, double floor) {
  const Tensor& x = val(a);
  Node n;
  n.op = Op::MaxConst;
  n.a = a.i;
  n.aux_d = floor;
  n.val = Tensor(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) n.val[i] = std::max(x[i], floor);
  return push(std::move(n));
}

Val Tape::exp_shift(Val scores) {
  const Tensor& s = val(scores);
  require(s.numel() > 0, "exp_shift: empty input");
  double m = s[0];
  for (int64_t i = 1; i < s.numel(); ++i) m = std::max(m, s[i]);
  Node n;
  n.op = Op::ExpShift;
  n.a = scores.i;
  n.aux_d = m;
  n.val = Tensor(s.shape());
  for (int64_t i = 0; i < s.numel(); ++i) n.val[i] = std::exp(s[i] - m);
  return push(std::move(n));
}

Val Tape::normalize(Val v) {
  const Tensor& x = val(v);
  double sum = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) sum += x[i];
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw NumericError("normalize: sum of weights is " + std::to_string(sum));
  Node n;
  n.op = Op::Normalize;
  n.a = v.i;
  n.aux_d = sum;
  n.val = glarc::scale(x, 1.0 / sum);
  return push(std::move(n));
}

Val Tape::concat(Val a, Val b) {
  const Tensor& x = val(a);
  const Tensor& y = val(b);
  Node n;
  n.op = Op::Concat2;
  n.a = a.i;
  n.b = b.i;
  n.val = Tensor({static_cast<int>(x.numel() + y.numel())});
  std::copy(x.data(), x.data() + x.numel(), n.val.data());
  std::copy(y.data(), y.data() + y.numel(), n.val.data() + x.numel());
  return push(std::move(n));
}

Val Tape::concat_n(std::span<const Val> parts) {
  require(!parts.empty(), "concat_n: no parts");
  int64_t total = 0;
  for (Val p : parts) total += val(p).numel();
  Node n;
  n.op = Op::ConcatN;
  n.val = Tensor({static_cast<int>(total)});
  int64_t off = 0;
  for (Val p : parts) {
    n.many.push_back(p.i);
    const Tensor& x = val(p);
    std::copy(x.data(), x.data() + x.numel(), n.val.data() + off);
    off += x.numel();
  }
  return push(std::move(n));
}

Val Tape::dots(std::span<const Val> rows, Val c) {
  require(!rows.empty(), "dots: no rows");
  Node n;
  n.op = Op::Dots;
  n.a = c.i;
  n.val = Tensor({static_cast<int>(rows.size())});
  for (size_t i = 0; i < rows.size(); ++i) {
    n.many.push_back(rows[i].i);
    n.val[static_cast<int64_t>(i)] = dot(val(rows[i]), val(c));
  }
  return push(std::move(n));
}

Val Tape::lincomb(Val coeffs, std::span<const Val> rows) {
  const Tensor& a = val(coeffs);
  require(a.numel() == static_cast<int64_t>(rows.size()),
          "lincomb: coefficient/row count mismatch");
  Node n;
  n.op = Op::Lincomb;
  n.a = coeffs.i;
  n.val = Tensor(val(rows[0]).shape());
  for (size_t i = 0; i < rows.size(); ++i) {
    n.many.push_back(rows[i].i);
    axpy(a[static_cast<int64_t>(i)], val(rows[i]), n.val);
  }
  return push(std::move(n));
}

Val Tape::cross_entropy_logits(Val logits, int gold) {
  const Tensor& z = val(logits);
  require(gold >= 0 && gold < z.numel(), "cross_entropy_logits: gold index out of range");
  double m = z[0];
  for (int64_t i = 1; i < z.numel(); ++i) m = std::max(m, z[i]);
  double sum = 0.0;
  for (int64_t i = 0; i < z.numel(); ++i) sum += std::exp(z[i] - m);
  Node n;
  n.op = Op::CrossEntropyLogits;
  n.a = logits.i;
  n.aux_i = gold;
  n.aux_t = Tensor(z.shape());  // softmax probabilities, reused in backward
  for (int64_t i = 0; i < z.numel(); ++i) n.aux_t[i] = std::exp(z[i] - m) / sum;
  n.val = Tensor::vec({(m + std::log(sum)) - z[gold]});
  return push(std::move(n));
}

Val Tape::bce_sum(Val m, Tensor targets) {
  const Tensor& x = val(m);
  require(x.numel() == targets.numel(), "bce_sum: mask/target length mismatch");
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  double loss = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    double t = targets[i];
    require(t == 0.0 || t == 1.0, "bce_sum: targets must be 0/1");
    double p = std::clamp(x[i], kLo, kHi);
    loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  Node n;
  n.op = Op::BceSum;
  n.a = m.i;
  n.aux_t = std::move(targets);
  n.val = Tensor::vec({loss});
  return push(std::move(n));
}

Tensor& Tape::grad_of(int idx) {
  Node& n = nodes_[static_cast<size_t>(idx)];
  if (n.grad.numel() == 0) n.grad = Tensor(val(Val{idx}).shape());
  return n.grad;
}

void Tape::backward(Val seed_scalar) {
  require(seed_scalar.valid() && seed_scalar.i < size(), "backward: bad seed");
  if (grads_ == nullptr)
    throw UsageError("backward: tape was built without a gradient store");
  require(val(seed_scalar).numel() == 1, "backward: seed must be scalar");
  grad_of(seed_scalar.i)[0] += 1.0;
  for (int i = seed_scalar.i; i >= 0; --i) {
    if (nodes_[static_cast<size_t>(i)].grad.numel() == 0) continue;
    backprop_node(i);
  }
}

void Tape::backprop_node(int idx) {
  Node& n = nodes_[static_cast<size_t>(idx)];
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::Input:
      break;
    case Op::Param:
      axpy(1.0, g, grads_->tensor(n.aux_i));
      break;
    case Op::TableRow: {
      Tensor& gt = grads_->tensor(n.aux_i);
      int cols = gt.cols();
      for (int c = 0; c < cols; ++c) gt.at(n.aux_j, c) += g[c];
      break;
    }
    case Op::MatVec: {
      const Tensor& W = val(Val{n.a});
      const Tensor& x = val(Val{n.b});
      Tensor& gW = grad_of(n.a);
      Tensor& gx = grad_of(n.b);
      for (int r = 0; r < W.rows(); ++r) {
        double gr = g[r];
        if (gr == 0.0) continue;
        for (int c = 0; c < W.cols(); ++c) {
          gW.at(r, c) += gr * x[c];
          gx[c] += gr * W.at(r, c);
        }
      }
      break;
    }
    case Op::Add:
      axpy(1.0, g, grad_of(n.a));
      axpy(1.0, g, grad_of(n.b));
      break;
    case Op::Sub:
      axpy(1.0, g, grad_of(n.a));
      axpy(-1.0, g, grad_of(n.b));
      break;
    case Op::Mul: {
      const Tensor& a = val(Val{n.a});
      const Tensor& b = val(Val{n.b});
      Tensor& ga = grad_of(n.a);
      Tensor& gb = grad_of(n.b);
      for (int64_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i] * b[i];
        gb[i] += g[i] * a[i];
      }
      break;
    }
    case Op::Scale:
      axpy(n.aux_d, g, grad_of(n.a));
      break;
    case Op::Sigmoid: {
      Tensor& ga = grad_of(n.a);
      for (int64_t i = 0; i < g.numel(); ++i)
        ga[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
      break;
    }
    case Op::Tanh: {
      Tensor& ga = grad_of(n.a);
      for (int64_t i = 0; i < g.numel(); ++i)
        ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
      break;
    }
    case Op::MaxConst: {
      const Tensor& x = val(Val{n.a});
      Tensor& ga = grad_of(n.a);
      for (int64_t i = 0; i < g.numel(); ++i)
        if (x[i] > n.aux_d) ga[i] += g[i];
      break;
    }
    case Op::ExpShift: {
      Tensor& ga = grad_of(n.a);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * n.val[i];
      break;
    }
    case Op::Normalize: {
      // y = v / S with S treated as sum(v): dv_j = (g_j - g.y) / S
      double gy = dot(g, n.val);
      Tensor& ga = grad_of(n.a);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += (g[i] - gy) / n.aux_d;
      break;
    }
    case Op::Concat2: {
      Tensor& ga = grad_of(n.a);
      Tensor& gb = grad_of(n.b);
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g[i];
      for (int64_t i = 0; i < gb.numel(); ++i) gb[i] += g[ga.numel() + i];
      break;
    }
    case Op::ConcatN: {
      int64_t off = 0;
      for (int p : n.many) {
        Tensor& gp = grad_of(p);
        for (int64_t i = 0; i < gp.numel(); ++i) gp[i] += g[off + i];
        off += gp.numel();
      }
      break;
    }
    case Op::Dots: {
      const Tensor& c = val(Val{n.a});
      Tensor& gc = grad_of(n.a);
      for (size_t r = 0; r < n.many.size(); ++r) {
        double gr = g[static_cast<int64_t>(r)];
        if (gr == 0.0) continue;
        axpy(gr, c, grad_of(n.many[r]));
        axpy(gr, val(Val{n.many[r]}), gc);
      }
      break;
    }
    case Op::Lincomb: {
      const Tensor& coeffs = val(Val{n.a});
      Tensor& gcoeffs = grad_of(n.a);
      for (size_t r = 0; r < n.many.size(); ++r) {
        gcoeffs[static_cast<int64_t>(r)] += dot(g, val(Val{n.many[r]}));
        axpy(coeffs[static_cast<int64_t>(r)], g, grad_of(n.many[r]));
      }
      break;
    }
    case Op::CrossEntropyLogits: {
      double gs = g[0];
      Tensor& gz = grad_of(n.a);
      for (int64_t i = 0; i < gz.numel(); ++i) {
        double onehot = (i == n.aux_i) ? 1.0 : 0.0;
        gz[i] += gs * (n.aux_t[i] - onehot);
      }
      break;
    }
    case Op::BceSum: {
      constexpr double kLo = 1e-12;
      constexpr double kHi = 1.0 - 1e-12;
      double gs = g[0];
      const Tensor& x = val(Val{n.a});
      Tensor& gm = grad_of(n.a);
      for (int64_t i = 0; i < x.numel(); ++i) {
        if (x[i] < kLo || x[i] > kHi) continue;  // clamp is flat outside
        double t = n.aux_t[i];
        gm[i] += gs * (-t / x[i] + (1.0 - t) / (1.0 - x[i]));
      }
      break;
    }
  }
}

Val gru_step(Tape& t, const GruCellVals& cell, Val x, Val h_prev) {
  Val z = t.sigmoid(t.add(t.add(t.matvec(cell.Wz, x), t.matvec(cell.Uz, h_prev)), cell.bz));
  Val r = t.sigmoid(t.add(t.add(t.matvec(cell.Wr, x), t.matvec(cell.Ur, h_prev)), cell.br));
  Val cand = t.tanh(
      t.add(t.add(t.matvec(cell.Wh, x), t.matvec(cell.Uh, t.mul(r, h_prev))), cell.bh));
  Val one = t.input(Tensor::full({static_cast<int>(t.val(z).numel())}, 1.0));
  return t.add(t.mul(t.sub(one, z), h_prev), t.mul(z, cand));
}

std::vector<Val> bigru_scan(Tape& t, const GruCellVals& fwd, const GruCellVals& bwd,
                            std::span<const Val> inputs, int hidden) {
  if (inputs.empty()) throw UsageError("bigru_scan: empty sequence");
  size_t l = inputs.size();
  std::vector<Val> hf(l), hb(l);
  Val h = t.input(Tensor({hidden}));
  for (size_t i = 0; i < l; ++i) {
    h = gru_step(t, fwd, inputs[i], h);
    hf[i] = h;
  }
  h = t.input(Tensor({hidden}));
  for (size_t i = l; i-- > 0;) {
    h = gru_step(t, bwd, inputs[i], h);
    hb[i] = h;
  }
  std::vector<Val> out(l);
  for (size_t i = 0; i < l; ++i) out[i] = t.concat(hf[i], hb[i]);
  return out;
}

}  // namespace glarc
