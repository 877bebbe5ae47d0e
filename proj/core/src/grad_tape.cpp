#include "tnad/grad_tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tnad {

GradTape::Node GradTape::constant(DenseTensor value) {
  Entry e;
  e.kind = Kind::constant;
  e.value = ScaledTensor(std::move(value));
  nodes_.push_back(std::move(e));
  return nodes_.size() - 1;
}

GradTape::Node GradTape::parameter(DenseTensor value, std::size_t param_index) {
  Entry e;
  e.kind = Kind::parameter;
  e.value = ScaledTensor(std::move(value));
  e.param_index = param_index;
  e.needs_grad = true;
  nodes_.push_back(std::move(e));
  return nodes_.size() - 1;
}

GradTape::Node GradTape::contract(Node a, Node b, AxisPairs pairs) {
  const Entry& ea = nodes_.at(a);
  const Entry& eb = nodes_.at(b);
  Entry e;
  e.kind = Kind::contraction;
  e.value = ScaledTensor(tnad::contract(ea.value.mantissa, eb.value.mantissa, pairs),
                         ea.value.log_scale + eb.value.log_scale);
  if (ea.value.is_zero || eb.value.is_zero) {
    e.value.mantissa *= 0.0;
    e.value.log_scale = 0.0;
    e.value.is_zero = true;
    e.rescale = 0.0;
  } else {
    e.rescale = renormalize_in_place(e.value);
  }
  e.a = a;
  e.b = b;
  e.pairs = std::move(pairs);
  e.needs_grad = ea.needs_grad || eb.needs_grad;
  nodes_.push_back(std::move(e));
  return nodes_.size() - 1;
}

LogValue GradTape::log_value(Node root) const {
  const ScaledTensor& v = nodes_.at(root).value;
  if (v.shape().size() != 0) throw ShapeError("log_value needs a rank-0 node, got " + shape_string(v.shape()));
  const double m = v.mantissa.item();
  if (std::isnan(m) || std::isnan(v.log_scale)) return LogValue::of(std::numeric_limits<double>::quiet_NaN());
  if (v.is_zero || !(m > 0.0)) return LogValue::zero();
  return LogValue::of(std::log(m) + v.log_scale);
}

namespace {

// Position of `axis` within the ascending list `axes`.
std::size_t rank_in(const std::vector<std::size_t>& axes, std::size_t axis) {
  return static_cast<std::size_t>(std::find(axes.begin(), axes.end(), axis) - axes.begin());
}

}  // namespace

void GradTape::backward(Node root, double weight, std::span<DenseTensor> param_grads) const {
  const LogValue lv = log_value(root);
  if (lv.is_zero) throw std::domain_error("backward through a non-positive network value");

  std::vector<std::optional<DenseTensor>> adj(root + 1);
  adj[root] = DenseTensor::scalar(1.0 / nodes_[root].value.mantissa.item());

  auto accumulate = [&adj](Node n, DenseTensor g) {
    if (adj[n]) *adj[n] += g;
    else adj[n] = std::move(g);
  };

  for (Node n = root + 1; n-- > 0;) {
    if (!adj[n]) continue;
    const Entry& e = nodes_[n];
    if (!e.needs_grad) continue;
    if (e.kind == Kind::parameter) {
      DenseTensor g = std::move(*adj[n]);
      g *= weight * std::exp(-e.value.log_scale);
      param_grads[e.param_index] += g;
      continue;
    }
    if (e.kind != Kind::contraction) continue;

    const DenseTensor& gc = *adj[n];
    const Entry& ea = nodes_[e.a];
    const Entry& eb = nodes_[e.b];
    const std::size_t rank_a = ea.value.mantissa.rank();
    const std::size_t rank_b = eb.value.mantissa.rank();

    std::vector<bool> paired_a(rank_a, false), paired_b(rank_b, false);
    for (const auto& p : e.pairs) {
      paired_a[p.left] = true;
      paired_b[p.right] = true;
    }
    std::vector<std::size_t> free_a, free_b, pa_sorted, pb_sorted;
    for (std::size_t i = 0; i < rank_a; ++i) (paired_a[i] ? pa_sorted : free_a).push_back(i);
    for (std::size_t i = 0; i < rank_b; ++i) (paired_b[i] ? pb_sorted : free_b).push_back(i);
    const double inv = 1.0 / e.rescale;

    if (ea.needs_grad) {
      AxisPairs pairs;
      for (std::size_t t = 0; t < free_b.size(); ++t) pairs.push_back({free_a.size() + t, free_b[t]});
      DenseTensor raw = tnad::contract(gc, eb.value.mantissa, pairs);
      std::vector<std::size_t> perm(rank_a);
      for (std::size_t u = 0; u < free_a.size(); ++u) perm[free_a[u]] = u;
      for (const auto& p : e.pairs) perm[p.left] = free_a.size() + rank_in(pb_sorted, p.right);
      DenseTensor g = permute(raw, perm);
      g *= inv;
      accumulate(e.a, std::move(g));
    }
    if (eb.needs_grad) {
      AxisPairs pairs;
      for (std::size_t u = 0; u < free_a.size(); ++u) pairs.push_back({free_a[u], u});
      DenseTensor raw = tnad::contract(ea.value.mantissa, gc, pairs);
      std::vector<std::size_t> perm(rank_b);
      for (std::size_t t = 0; t < free_b.size(); ++t) perm[free_b[t]] = pa_sorted.size() + t;
      for (const auto& p : e.pairs) perm[p.right] = rank_in(pa_sorted, p.left);
      DenseTensor g = permute(raw, perm);
      g *= inv;
      accumulate(e.b, std::move(g));
    }
    adj[n].reset();
  }
}

std::vector<ScaledTensor> GradTape::replay() const {
  std::vector<ScaledTensor> values;
  values.reserve(nodes_.size());
  for (const Entry& e : nodes_) {
    if (e.kind == Kind::contraction) values.push_back(scaled_contract(values[e.a], values[e.b], e.pairs));
    else values.push_back(e.value);
  }
  return values;
}

std::vector<std::size_t> GradTape::referenced_parameters() const {
  std::vector<std::size_t> out;
  for (const Entry& e : nodes_)
    if (e.kind == Kind::parameter) out.push_back(e.param_index);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace tnad
