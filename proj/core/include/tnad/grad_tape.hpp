#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tnad/tensor.hpp"

namespace tnad {

/// log of a positive scalar network value. A zero (or negative) network value
/// is reported through `is_zero` with value = -infinity.
struct LogValue {
  double value = -std::numeric_limits<double>::infinity();
  bool is_zero = true;

  static LogValue zero() { return {}; }
  static LogValue of(double v) { return {v, false}; }
};

/// Records pairwise scaled contractions so that the gradient of log(root)
/// with respect to parameter leaves can be accumulated by a reverse sweep.
///
/// Adjoints are stored relative to each node's scale: the true adjoint of a
/// node with value m * exp(s) is g * exp(-s). Because log(root) is
/// homogeneous of degree zero in these scales, g stays O(1) even when the
/// network value itself is far outside the double range.
class GradTape {
 public:
  using Node = std::size_t;

  /// Leaf that does not receive gradients (embedding factors).
  Node constant(DenseTensor value);

  /// Leaf whose adjoint is accumulated into param_grads[param_index].
  /// The value is kept unscaled (log_scale 0).
  Node parameter(DenseTensor value, std::size_t param_index);

  /// Records scaled_contract(value(a), value(b), pairs).
  Node contract(Node a, Node b, AxisPairs pairs);

  const ScaledTensor& value(Node n) const { return nodes_.at(n).value; }
  std::size_t size() const { return nodes_.size(); }

  /// log of a rank-0 node's value.
  LogValue log_value(Node root) const;

  /// param_grads[i] += weight * d log(root) / d param_i for every parameter
  /// leaf reachable from root. Throws if the root value is not positive.
  void backward(Node root, double weight, std::span<DenseTensor> param_grads) const;

  /// Recomputes every node from the leaves in recording order.
  std::vector<ScaledTensor> replay() const;

  /// Parameter indices referenced by at least one leaf.
  std::vector<std::size_t> referenced_parameters() const;

 private:
  enum class Kind { constant, parameter, contraction };

  struct Entry {
    Kind kind = Kind::constant;
    ScaledTensor value;
    Node a = 0, b = 0;
    AxisPairs pairs;
    double rescale = 1.0;  // divisor applied while renormalizing the raw product
    std::size_t param_index = 0;
    bool needs_grad = false;
  };

  std::vector<Entry> nodes_;
};

}  // namespace tnad
