#ifndef UNIREG_TENSOR_HPP_
#define UNIREG_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace unireg {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. A default-constructed Tensor is null
// (no storage); a rank-0 Tensor is a scalar holding one value. Every
// dimension of a non-null tensor is positive.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return values_.size(); }
  bool is_null() const { return values_.empty(); }
  bool is_scalar() const { return values_.size() == 1; }

  // Matrix accessors; valid for rank-2 tensors only.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * shape_[1] + c];
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double item() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  void fill(double value);
  bool all_finite() const;

  // Returns a copy with a new shape holding the same number of values.
  Tensor reshaped(Shape shape) const;

  // Bitwise-equal shape and values.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t shape_numel(const Shape& shape);

}  // namespace unireg

#endif  // UNIREG_TENSOR_HPP_
