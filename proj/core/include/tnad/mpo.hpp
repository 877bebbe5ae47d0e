#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tnad/embedding.hpp"
#include "tnad/grad_tape.hpp"
#include "tnad/tensor.hpp"

namespace tnad {

/// Geometry of the spaced MPO: N input sites of dimension p, bonds of
/// dimension b, and an output leg of dimension p every `spacing` sites
/// starting at site 0.
struct MpoShape {
  std::size_t sites = 1;
  std::size_t physical_dim = 2;
  std::size_t bond_dim = 1;
  std::size_t spacing = 1;

  void validate() const;

  /// q = floor((N - 1) / S) + 1
  std::size_t output_sites() const { return (sites - 1) / spacing + 1; }
  bool is_output_site(std::size_t site) const { return site % spacing == 0; }

  /// (left bond, right bond, input[, output])
  Shape core_shape(std::size_t site) const;

  friend bool operator==(const MpoShape&, const MpoShape&) = default;
};

class MpoModel {
 public:
  MpoModel(MpoShape shape, std::vector<DenseTensor> cores);

  const MpoShape& shape() const { return shape_; }
  std::span<const DenseTensor> cores() const { return cores_; }
  const DenseTensor& core(std::size_t site) const { return cores_.at(site); }

  /// Direct access for optimizers. Callers must keep core shapes intact.
  std::vector<DenseTensor>& mutable_cores() { return cores_; }

  friend bool operator==(const MpoModel&, const MpoModel&) = default;

 private:
  MpoShape shape_;
  std::vector<DenseTensor> cores_;
};

/// Every core entry i.i.d. normal(0, stddev^2) from a generator seeded with `seed`.
MpoModel init_mpo(const MpoShape& shape, double stddev, std::uint64_t seed);

enum class Schedule {
  /// Vertical contractions, right-to-left segment sweeps, then the half
  /// network contracted against its own copy in zig-zag order.
  half_network,
  /// Single left-to-right sweep over the doubled network. Same value, used to
  /// cross-check the default schedule.
  left_to_right,
};

/// log ||P Phi(x)||^2
LogValue decision_log(const MpoModel& model, const ProductState& state,
                      Schedule schedule = Schedule::half_network);

/// log ||P||_F^2
LogValue fnorm_log(const MpoModel& model);

/// Records the decision network on `tape`; core i becomes parameter i.
GradTape::Node record_decision(GradTape& tape, const MpoModel& model, const ProductState& state,
                               Schedule schedule = Schedule::half_network);

/// Records the doubled F-norm network on `tape`; core i becomes parameter i.
GradTape::Node record_fnorm(GradTape& tape, const MpoModel& model);

/// Largest p^N accepted by materialize_dense.
inline constexpr std::size_t kMaxDenseInputDim = std::size_t{1} << 20;

/// The p^q x p^N matrix of P with the first site's index most significant on
/// both sides. For tests on small models only.
DenseTensor materialize_dense(const MpoModel& model);

/// phi(x_1) (x) ... (x) phi(x_N) as one p^N vector, first site most significant.
DenseTensor materialize_state(const ProductState& state);

}  // namespace tnad
