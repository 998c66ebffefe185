#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace glarc {

// Dense row-major tensor of 64-bit floats. Rank 1 (vectors) and rank 2
// (matrices, embedding tables) are all the model needs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor vec(std::vector<double> values);

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // rank-2 accessors
  int rows() const { return shape_[0]; }
  int cols() const { return shape_[1]; }
  double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  double* row(int r) { return data_.data() + static_cast<size_t>(r) * shape_[1]; }
  const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * shape_[1]; }

  double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool all_finite() const;
  std::string shape_str() const;  // e.g. "[3,4]"

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// --- elementwise / linear algebra helpers -----------------------------------

double dot(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& w, const Tensor& x);   // rank-2 w, rank-1 x
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);      // elementwise
Tensor scale(const Tensor& a, double k);

// y += k * x
void axpy(double k, const Tensor& x, Tensor& y);

// Numerically stable scalar sigmoid; saturates without overflow.
double sigmoid(double x);

// Shift-stable softmax: subtracts the max logit before exponentiation.
// Throws UsageError on empty input.
Tensor softmax(const Tensor& logits);

}  // namespace glarc
