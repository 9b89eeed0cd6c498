#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sflow::numkit {

using Shape = std::vector<std::size_t>;

/// Thrown when a computation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Every dimension is strictly positive; an empty shape denotes a scalar.
class Array {
 public:
  Array() : shape_{}, data_(1, 0.0) {}
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array scalar(double value) { return Array(Shape{}, std::vector<double>{value}); }
  static Array vector(std::initializer_list<double> values);
  static Array matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  // 2D helpers; rank-1 arrays are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const double& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double item() const;

  /// Same data, new shape with equal element count.
  Array reshaped(Shape shape) const;

  bool same_shape(const Array& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Array& operator+=(const Array& other);
  Array& operator-=(const Array& other);
  Array& operator*=(double s);

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Array operator+(Array a, const Array& b);
Array operator-(Array a, const Array& b);
Array operator*(Array a, double s);
Array operator*(double s, Array a);

/// Elementwise product.
Array hadamard(const Array& a, const Array& b);

double sum(const Array& a);
double mean(const Array& a);
double l2_norm(const Array& a);
double max_abs_diff(const Array& a, const Array& b);

/// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const Array& a, const Array& b, const char* what);

}  // namespace sflow::numkit
