#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnad {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense real tensor, row-major. A rank-0 tensor (empty shape) holds one scalar.
class DenseTensor {
 public:
  DenseTensor() : data_(1, 0.0) {}
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor scalar(double value) { return DenseTensor({}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Value of a rank-0 tensor.
  double item() const;

  /// NaN when any entry is NaN.
  double max_abs() const;
  bool all_finite() const;

  DenseTensor& operator*=(double factor);
  DenseTensor& operator+=(const DenseTensor& other);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Pairs an axis of the left operand with an axis of the right operand.
struct AxisPair {
  std::size_t left;
  std::size_t right;
};

using AxisPairs = std::vector<AxisPair>;

/// result axis i is axis perm[i] of t.
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

/// Sums over every paired axis. The result carries the unpaired axes of `a`
/// followed by the unpaired axes of `b`, each in their original order.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, const AxisPairs& pairs);

/// Multiply-add count of contract(a, b, pairs): the product of every distinct
/// leg dimension touched by the two operands.
std::uint64_t contraction_cost(const Shape& a, const Shape& b, const AxisPairs& pairs);

/// Counts the multiply-adds performed by contract() on this thread while alive.
/// Meters nest; every active meter sees every contraction.
class CostMeter {
 public:
  CostMeter();
  ~CostMeter();
  CostMeter(const CostMeter&) = delete;
  CostMeter& operator=(const CostMeter&) = delete;

  std::uint64_t multiply_adds() const { return count_; }

 private:
  friend void record_multiply_adds(std::uint64_t);
  std::uint64_t count_ = 0;
  CostMeter* outer_;
};

/// Tensor value mantissa * exp(log_scale). Renormalized tensors keep the
/// largest mantissa magnitude at exactly 1; an all-zero value is flagged
/// instead of carrying an infinite log scale.
struct ScaledTensor {
  DenseTensor mantissa;
  double log_scale = 0.0;
  bool is_zero = false;

  ScaledTensor() = default;
  explicit ScaledTensor(DenseTensor m, double log_scale = 0.0)
      : mantissa(std::move(m)), log_scale(log_scale) {}

  const Shape& shape() const { return mantissa.shape(); }

  /// mantissa * exp(log_scale); may overflow for extreme scales.
  DenseTensor to_dense() const;
};

/// Rescales in place and returns the divisor applied to the mantissa
/// (0 when the tensor is all zeros).
double renormalize_in_place(ScaledTensor& t);

ScaledTensor renormalize(ScaledTensor t);

ScaledTensor scaled_contract(const ScaledTensor& a, const ScaledTensor& b, const AxisPairs& pairs);

}  // namespace tnad
