#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "sau/common.hpp"

namespace sau {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

/// Dense row-major tensor of doubles. All training math runs in 64-bit;
/// 32-bit appears only in the on-disk feature format.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0);

  static Tensor from_data(Shape shape, std::vector<double> data);
  static Tensor row_vector(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // rank-2 accessors; rows()/cols() require rank() == 2
  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_[1]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void fill(double v);

  Tensor& operator+=(const Tensor& o);
  Tensor& operator*=(double c);

  /// Flattened copy with shape (size,).
  Tensor flat() const;
  /// Same data, new shape; element count must match.
  Tensor reshaped(Shape s) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t numel(const Shape& s);

}  // namespace sau
