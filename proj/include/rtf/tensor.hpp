#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rtf {

#ifdef RTF_FLOAT32
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. A zero-rank shape holds a single scalar.
class Tensor {
 public:
  Tensor() : data_(1, real{0}) {}
  explicit Tensor(Shape shape, real fill = real{0})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<real> values);

  static Tensor scalar(real v) { return Tensor(Shape{}, std::vector<real>{v}); }
  static Tensor vector(std::initializer_list<real> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<real> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  // Size of the last axis (1 for scalars).
  std::size_t inner() const { return shape_.empty() ? 1 : shape_.back(); }
  // Number of rows when viewed as [outer, inner].
  std::size_t outer() const { return size() / inner(); }

  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }
  real item() const { return data_.at(0); }

  std::span<real> values() { return data_; }
  std::span<const real> values() const { return data_; }
  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }

  // Same values, new shape. Throws std::invalid_argument on size mismatch.
  Tensor reshaped(Shape shape) const;

  void fill(real v);
  void add_(const Tensor& other);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<real> data_;
};

real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rtf
