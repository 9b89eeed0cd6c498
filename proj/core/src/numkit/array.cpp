#include "sflow/numkit/array.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sflow::numkit {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw std::invalid_argument("array dimensions must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw std::invalid_argument("shape " + shape_to_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
}

Array Array::vector(std::initializer_list<double> values) {
  return Array(Shape{values.size()}, std::vector<double>(values));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Array(Shape{rows, cols}, std::vector<double>(values));
}

std::size_t Array::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw std::out_of_range("axis out of range for shape " + shape_to_string(shape_));
  return shape_[axis];
}

std::size_t Array::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() <= 1) return 1;
  throw std::logic_error("rows() on rank-" + std::to_string(shape_.size()) + " array");
}

std::size_t Array::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  if (shape_.empty()) return 1;
  throw std::logic_error("cols() on rank-" + std::to_string(shape_.size()) + " array");
}

double Array::item() const {
  if (data_.size() != 1) throw std::logic_error("item() on array of shape " + shape_to_string(shape_));
  return data_[0];
}

Array Array::reshaped(Shape shape) const {
  return Array(std::move(shape), data_);
}

bool Array::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Array& Array::operator+=(const Array& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Array& Array::operator-=(const Array& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Array& Array::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Array operator+(Array a, const Array& b) { return a += b; }
Array operator-(Array a, const Array& b) { return a -= b; }
Array operator*(Array a, double s) { return a *= s; }
Array operator*(double s, Array a) { return a *= s; }

Array hadamard(const Array& a, const Array& b) {
  require_same_shape(a, b, "hadamard");
  Array out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double sum(const Array& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double mean(const Array& a) { return sum(a) / static_cast<double>(a.size()); }

double l2_norm(const Array& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Array& a, const Array& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void require_same_shape(const Array& a, const Array& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
}

}  // namespace sflow::numkit
