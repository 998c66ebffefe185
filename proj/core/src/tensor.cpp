#include "glarc/tensor.hpp"

#include <cassert>
#include <cmath>
#include <cstdint>
#include <utility>

#include "glarc/errors.hpp"

namespace glarc {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw UsageError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw UsageError("tensor data length does not match shape");
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = value;
  return t;
}

Tensor Tensor::vec(std::vector<double> values) {
  std::vector<int> shape{static_cast<int>(values.size())};
  return Tensor(std::move(shape), std::move(values));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

double dot(const Tensor& a, const Tensor& b) {
  assert(a.numel() == b.numel());
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) s += pa[i] * pb[i];
  return s;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  assert(w.rank() == 2 && w.cols() == static_cast<int>(x.numel()));
  Tensor y({w.rows()});
  const int n = w.cols();
  const double* px = x.data();
  for (int r = 0; r < w.rows(); ++r) {
    const double* pw = w.row(r);
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += pw[c] * px[c];
    y[r] = s;
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  assert(a.same_shape(b));
  Tensor r = a;
  for (std::int64_t i = 0; i < r.numel(); ++i) r[i] += b[i];
  return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  assert(a.same_shape(b));
  Tensor r = a;
  for (std::int64_t i = 0; i < r.numel(); ++i) r[i] -= b[i];
  return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  assert(a.same_shape(b));
  Tensor r = a;
  for (std::int64_t i = 0; i < r.numel(); ++i) r[i] *= b[i];
  return r;
}

Tensor scale(const Tensor& a, double k) {
  Tensor r = a;
  for (std::int64_t i = 0; i < r.numel(); ++i) r[i] *= k;
  return r;
}

void axpy(double k, const Tensor& x, Tensor& y) {
  assert(x.numel() == y.numel());
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] += k * x[i];
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax(const Tensor& logits) {
  if (logits.numel() == 0) throw UsageError("softmax of empty vector");
  double mx = logits[0];
  for (std::int64_t i = 1; i < logits.numel(); ++i) mx = std::max(mx, logits[i]);
  Tensor out({static_cast<int>(logits.numel())});
  double sum = 0.0;
  for (std::int64_t i = 0; i < logits.numel(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::int64_t i = 0; i < logits.numel(); ++i) out[i] /= sum;
  return out;
}

}  // namespace glarc
