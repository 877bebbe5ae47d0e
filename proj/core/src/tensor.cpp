#include "tnad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tnad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  for (auto d : shape_)
    if (d == 0) throw ShapeError("axis sizes must be positive, got " + shape_string(shape_));
  data_.assign(shape_size(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    if (d == 0) throw ShapeError("axis sizes must be positive, got " + shape_string(shape_));
  if (data_.size() != shape_size(shape_))
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
}

std::size_t DenseTensor::flat_index(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size())
    throw ShapeError("index rank " + std::to_string(index.size()) + " for tensor of shape " +
                     shape_string(shape_));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape_[axis]) throw ShapeError("index out of range on axis " + std::to_string(axis));
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) { return data_[flat_index(index)]; }

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(index)];
}

double DenseTensor::item() const {
  if (!shape_.empty()) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

double DenseTensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) {
    if (std::isnan(v)) return v;
    m = std::max(m, std::abs(v));
  }
  return m;
}

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseTensor& DenseTensor::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.shape_ != shape_)
    throw ShapeError("cannot add " + shape_string(other.shape_) + " to " + shape_string(shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t rank = t.rank();
  if (perm.size() != rank) throw ShapeError("permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("invalid axis permutation");
    seen[p] = true;
  }
  bool identity = true;
  for (std::size_t i = 0; i < rank; ++i) identity = identity && perm[i] == i;
  if (identity) return t;

  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = t.dim(perm[i]);

  // Source strides, reordered to follow the output axes.
  std::vector<std::size_t> src_stride(rank);
  {
    std::size_t s = 1;
    for (std::size_t a = rank; a-- > 0;) {
      src_stride[a] = s;
      s *= t.dim(a);
    }
  }
  std::vector<std::size_t> stride(rank);
  for (std::size_t i = 0; i < rank; ++i) stride[i] = src_stride[perm[i]];

  DenseTensor out(out_shape);
  auto src = t.data();
  auto dst = out.data();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t offset = 0;
  for (std::size_t flat = 0; flat < dst.size(); ++flat) {
    dst[flat] = src[offset];
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < out_shape[a]) {
        offset += stride[a];
        break;
      }
      offset -= stride[a] * (out_shape[a] - 1);
      idx[a] = 0;
    }
  }
  return out;
}

namespace {

thread_local CostMeter* active_meter = nullptr;

struct ContractionPlan {
  std::vector<std::size_t> free_a, free_b;
  std::vector<std::size_t> perm_a, perm_b;
  std::size_t rows = 1, inner = 1, cols = 1;
  Shape result_shape;
};

ContractionPlan plan_contraction(const Shape& a, const Shape& b, const AxisPairs& pairs) {
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  ContractionPlan plan;
  for (const auto& [la, rb] : pairs) {
    const std::string where = "axis pair (" + std::to_string(la) + "," + std::to_string(rb) + ")";
    if (la >= a.size() || rb >= b.size())
      throw ShapeError(where + " out of range for shapes " + shape_string(a) + " and " +
                       shape_string(b));
    if (used_a[la] || used_b[rb]) throw ShapeError(where + " repeats an axis");
    if (a[la] != b[rb])
      throw ShapeError(where + " pairs sizes " + std::to_string(a[la]) + " and " +
                       std::to_string(b[rb]));
    used_a[la] = used_b[rb] = true;
    plan.inner *= a[la];
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!used_a[i]) {
      plan.free_a.push_back(i);
      plan.rows *= a[i];
      plan.result_shape.push_back(a[i]);
    }
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!used_b[i]) {
      plan.free_b.push_back(i);
      plan.cols *= b[i];
      plan.result_shape.push_back(b[i]);
    }
  plan.perm_a = plan.free_a;
  for (const auto& p : pairs) plan.perm_a.push_back(p.left);
  for (const auto& p : pairs) plan.perm_b.push_back(p.right);
  plan.perm_b.insert(plan.perm_b.end(), plan.free_b.begin(), plan.free_b.end());
  return plan;
}

}  // namespace

void record_multiply_adds(std::uint64_t n) {
  for (CostMeter* m = active_meter; m != nullptr; m = m->outer_) m->count_ += n;
}

CostMeter::CostMeter() : outer_(active_meter) { active_meter = this; }

CostMeter::~CostMeter() { active_meter = outer_; }

std::uint64_t contraction_cost(const Shape& a, const Shape& b, const AxisPairs& pairs) {
  const auto plan = plan_contraction(a, b, pairs);
  return std::uint64_t{plan.rows} * plan.inner * plan.cols;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, const AxisPairs& pairs) {
  const auto plan = plan_contraction(a.shape(), b.shape(), pairs);
  const DenseTensor am = permute(a, plan.perm_a);
  const DenseTensor bm = permute(b, plan.perm_b);
  DenseTensor out(plan.result_shape);

  const auto x = am.data();
  const auto y = bm.data();
  auto z = out.data();
  const std::size_t m = plan.rows, k = plan.inner, n = plan.cols;
  for (std::size_t i = 0; i < m; ++i) {
    double* zi = z.data() + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double xv = x[i * k + l];
      const double* yl = y.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) zi[j] += xv * yl[j];
    }
  }
  record_multiply_adds(std::uint64_t{m} * k * n);
  return out;
}

DenseTensor ScaledTensor::to_dense() const {
  DenseTensor out = mantissa;
  if (is_zero) {
    out *= 0.0;
    return out;
  }
  out *= std::exp(log_scale);
  return out;
}

double renormalize_in_place(ScaledTensor& t) {
  const double m = t.mantissa.max_abs();
  if (m == 0.0) {
    t.log_scale = 0.0;
    t.is_zero = true;
    return 0.0;
  }
  t.is_zero = false;
  if (m != 1.0) {
    for (double& v : t.mantissa.data()) v /= m;
    t.log_scale += std::log(m);
  }
  return m;
}

ScaledTensor renormalize(ScaledTensor t) {
  renormalize_in_place(t);
  return t;
}

ScaledTensor scaled_contract(const ScaledTensor& a, const ScaledTensor& b, const AxisPairs& pairs) {
  ScaledTensor out(contract(a.mantissa, b.mantissa, pairs), a.log_scale + b.log_scale);
  if (a.is_zero || b.is_zero) {
    out.mantissa *= 0.0;
    out.log_scale = 0.0;
    out.is_zero = true;
    return out;
  }
  renormalize_in_place(out);
  return out;
}

}  // namespace tnad
