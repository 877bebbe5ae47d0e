#include "tnad/mpo.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace tnad {

void MpoShape::validate() const {
  if (sites < 1) throw std::invalid_argument("MPO needs at least one site");
  if (physical_dim < 1) throw std::invalid_argument("physical dimension must be positive");
  if (bond_dim < 1) throw std::invalid_argument("bond dimension must be positive");
  if (spacing < 1) throw std::invalid_argument("spacing must be positive");
}

Shape MpoShape::core_shape(std::size_t site) const {
  const std::size_t left = site == 0 ? 1 : bond_dim;
  const std::size_t right = site + 1 == sites ? 1 : bond_dim;
  if (is_output_site(site)) return {left, right, physical_dim, physical_dim};
  return {left, right, physical_dim};
}

MpoModel::MpoModel(MpoShape shape, std::vector<DenseTensor> cores)
    : shape_(shape), cores_(std::move(cores)) {
  shape_.validate();
  if (cores_.size() != shape_.sites)
    throw ShapeError("expected " + std::to_string(shape_.sites) + " cores, got " +
                     std::to_string(cores_.size()));
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    if (cores_[i].shape() != shape_.core_shape(i))
      throw ShapeError("core " + std::to_string(i) + " has shape " + shape_string(cores_[i].shape()) +
                       ", expected " + shape_string(shape_.core_shape(i)));
    if (!cores_[i].all_finite()) throw std::invalid_argument("core " + std::to_string(i) + " is not finite");
  }
}

MpoModel init_mpo(const MpoShape& shape, double stddev, std::uint64_t seed) {
  shape.validate();
  if (!(stddev > 0.0)) throw std::invalid_argument("init stddev must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<DenseTensor> cores;
  cores.reserve(shape.sites);
  for (std::size_t i = 0; i < shape.sites; ++i) {
    DenseTensor core(shape.core_shape(i));
    for (double& v : core.data()) v = normal(gen);
    cores.push_back(std::move(core));
  }
  return MpoModel(shape, std::move(cores));
}

namespace {

using Node = GradTape::Node;

// One tensor of the half network: an MPS site with axes at the given positions.
struct Segment {
  Node node;
  std::size_t left, out, right;
};

void check_state(const MpoModel& model, const ProductState& state) {
  const auto& s = model.shape();
  if (state.sites() != s.sites)
    throw ShapeError("state has " + std::to_string(state.sites()) + " sites, model has " +
                     std::to_string(s.sites));
  for (const auto& f : state.factors)
    if (f.shape() != Shape{s.physical_dim})
      throw ShapeError("state factor of shape " + shape_string(f.shape()) + " for physical dimension " +
                       std::to_string(s.physical_dim));
}

// Core i contracted with phi(x_i): axes (left, right[, out]).
std::vector<Node> record_vertical(GradTape& tape, const MpoModel& model, const ProductState& state) {
  std::vector<Node> m;
  m.reserve(model.shape().sites);
  for (std::size_t i = 0; i < model.shape().sites; ++i) {
    const Node core = tape.parameter(model.core(i), i);
    const Node factor = tape.constant(state.factors[i]);
    m.push_back(tape.contract(core, factor, {{2, 0}}));
  }
  return m;
}

Node record_half_network(GradTape& tape, const MpoModel& model, const ProductState& state) {
  const auto& s = model.shape();
  const std::vector<Node> m = record_vertical(tape, model, state);

  std::vector<Segment> segments;
  for (std::size_t start = 0; start < s.sites; start += s.spacing) {
    const std::size_t end = std::min(start + s.spacing, s.sites) - 1;
    if (start == end) {
      segments.push_back({m[start], 0, 2, 1});
      continue;
    }
    Node t = m[end];
    for (std::size_t k = end; k-- > start;) t = tape.contract(m[k], t, {{1, 0}});
    segments.push_back({t, 0, 1, 2});
  }

  const Segment& first = segments.front();
  if (segments.size() == 1)
    return tape.contract(first.node, first.node,
                         {{first.left, first.left}, {first.out, first.out}, {first.right, first.right}});

  Node env = tape.contract(first.node, first.node, {{first.left, first.left}, {first.out, first.out}});
  for (std::size_t j = 1; j < segments.size(); ++j) {
    const Segment& g = segments[j];
    // After pairing env axis 0 with g.left, g's remaining axes follow env's axis 1 in order.
    auto pos = [&g](std::size_t axis) { return 1 + axis - (axis > g.left ? 1 : 0); };
    const Node x = tape.contract(env, g.node, {{0, g.left}});
    AxisPairs pairs{{0, g.left}, {pos(g.out), g.out}};
    if (j + 1 == segments.size()) pairs.push_back({pos(g.right), g.right});
    env = tape.contract(x, g.node, std::move(pairs));
  }
  return env;
}

Node record_left_to_right(GradTape& tape, const MpoModel& model, const ProductState& state) {
  const auto& s = model.shape();
  const std::vector<Node> m = record_vertical(tape, model, state);
  Node env = 0;
  for (std::size_t i = 0; i < s.sites; ++i) {
    const bool out = s.is_output_site(i);
    const bool last = i + 1 == s.sites;
    AxisPairs pairs{{0, 0}};
    if (out) pairs.push_back({2, 2});
    if (last) pairs.push_back({1, 1});
    if (i == 0) {
      env = tape.contract(m[0], m[0], std::move(pairs));
    } else {
      const Node x = tape.contract(env, m[i], {{0, 0}});
      env = tape.contract(x, m[i], std::move(pairs));
    }
  }
  return env;
}

}  // namespace

GradTape::Node record_decision(GradTape& tape, const MpoModel& model, const ProductState& state,
                               Schedule schedule) {
  check_state(model, state);
  return schedule == Schedule::half_network ? record_half_network(tape, model, state)
                                            : record_left_to_right(tape, model, state);
}

GradTape::Node record_fnorm(GradTape& tape, const MpoModel& model) {
  const auto& s = model.shape();
  Node env = 0;
  for (std::size_t i = 0; i < s.sites; ++i) {
    const Node core = tape.parameter(model.core(i), i);
    const bool out = s.is_output_site(i);
    const bool last = i + 1 == s.sites;
    AxisPairs pairs{{0, 0}, {2, 2}};
    if (out) pairs.push_back({3, 3});
    if (last) pairs.push_back({1, 1});
    if (i == 0) {
      env = tape.contract(core, core, std::move(pairs));
    } else {
      const Node x = tape.contract(env, core, {{0, 0}});
      env = tape.contract(x, core, std::move(pairs));
    }
  }
  return env;
}

LogValue decision_log(const MpoModel& model, const ProductState& state, Schedule schedule) {
  GradTape tape;
  const Node root = record_decision(tape, model, state, schedule);
  return tape.log_value(root);
}

LogValue fnorm_log(const MpoModel& model) {
  GradTape tape;
  const Node root = record_fnorm(tape, model);
  return tape.log_value(root);
}

DenseTensor materialize_dense(const MpoModel& model) {
  const auto& s = model.shape();
  std::size_t in_dim = 1, out_dim = 1;
  for (std::size_t i = 0; i < s.sites; ++i) {
    in_dim *= s.physical_dim;
    if (in_dim > kMaxDenseInputDim)
      throw std::length_error("materialize_dense: p^N exceeds " + std::to_string(kMaxDenseInputDim));
  }
  for (std::size_t j = 0; j < s.output_sites(); ++j) out_dim *= s.physical_dim;
  if (out_dim > (std::size_t{1} << 27) / in_dim)
    throw std::length_error("materialize_dense: p^q * p^N exceeds 2^27 entries");

  // Legs of the running tensor between the leading left bond and the trailing right bond.
  struct Leg {
    std::size_t site;
    bool output;
  };
  std::vector<Leg> legs;
  auto site_legs = [&](std::size_t i) {
    legs.push_back({i, false});
    if (s.is_output_site(i)) legs.push_back({i, true});
  };

  // core axes (L, R, in[, out]) -> (L, in[, out], R)
  auto bond_last = [](const DenseTensor& core) {
    std::vector<std::size_t> perm{0};
    for (std::size_t a = 2; a < core.rank(); ++a) perm.push_back(a);
    perm.push_back(1);
    return permute(core, perm);
  };

  DenseTensor t = bond_last(model.core(0));
  site_legs(0);
  for (std::size_t i = 1; i < s.sites; ++i) {
    DenseTensor next = contract(t, model.core(i), {{t.rank() - 1, 0}});
    // next axes: (L, legs..., R_i, in_i[, out_i]); move R_i to the end.
    const std::size_t r_axis = 1 + legs.size();
    std::vector<std::size_t> perm;
    for (std::size_t a = 0; a < next.rank(); ++a)
      if (a != r_axis) perm.push_back(a);
    perm.push_back(r_axis);
    t = permute(next, perm);
    site_legs(i);
  }

  std::vector<std::size_t> perm;
  for (std::size_t k = 0; k < legs.size(); ++k)
    if (legs[k].output) perm.push_back(1 + k);
  for (std::size_t k = 0; k < legs.size(); ++k)
    if (!legs[k].output) perm.push_back(1 + k);
  perm.push_back(0);
  perm.push_back(t.rank() - 1);
  DenseTensor ordered = permute(t, perm);
  std::vector<double> data(ordered.data().begin(), ordered.data().end());
  return DenseTensor({out_dim, in_dim}, std::move(data));
}

DenseTensor materialize_state(const ProductState& state) {
  std::vector<double> v{1.0};
  for (const auto& f : state.factors) {
    std::vector<double> next;
    next.reserve(v.size() * f.size());
    for (double a : v)
      for (double b : f.data()) next.push_back(a * b);
    v = std::move(next);
  }
  const std::size_t n = v.size();
  return DenseTensor({n}, std::move(v));
}

}  // namespace tnad
