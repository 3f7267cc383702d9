#include "sau/tensor.hpp"

#include <sstream>

namespace sau {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(std::initializer_list<std::size_t> shape, double fill)
    : Tensor(Shape(shape), fill) {}

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  if (numel(shape) != data.size())
    fail("tensor: data length " + std::to_string(data.size()) + " does not match shape " +
         shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::row_vector(std::vector<double> data) {
  Shape s{data.size()};
  return from_data(std::move(s), std::move(data));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o)) fail("tensor: += shape mismatch " + shape_str(shape_) + " vs " + shape_str(o.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

Tensor Tensor::flat() const {
  Tensor t = *this;
  t.shape_ = Shape{data_.size()};
  return t;
}

Tensor Tensor::reshaped(Shape s) const {
  if (numel(s) != data_.size()) fail("tensor: reshape element count mismatch");
  Tensor t = *this;
  t.shape_ = std::move(s);
  return t;
}

}  // namespace sau
