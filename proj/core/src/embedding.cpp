#include "tnad/embedding.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace tnad {

std::string_view to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::trigonometric ? "trig" : "fourier";
}

EmbeddingKind parse_embedding_kind(std::string_view name) {
  if (name == "trig" || name == "trigonometric") return EmbeddingKind::trigonometric;
  if (name == "fourier" || name == "four") return EmbeddingKind::fourier;
  throw std::invalid_argument("unknown embedding '" + std::string(name) + "'");
}

void EmbeddingSpec::validate() const {
  if (kind == EmbeddingKind::trigonometric && (physical_dim < 2 || physical_dim % 2 != 0))
    throw std::invalid_argument("trigonometric embedding needs an even physical dimension >= 2, got " +
                                std::to_string(physical_dim));
  if (kind == EmbeddingKind::fourier && physical_dim < 2)
    throw std::invalid_argument("fourier embedding needs physical dimension >= 2, got " +
                                std::to_string(physical_dim));
}

std::vector<double> phi_trig(double x, std::size_t k) {
  if (k == 0) throw std::invalid_argument("phi_trig needs k >= 1");
  std::vector<double> out(2 * k);
  const double norm = 1.0 / std::sqrt(static_cast<double>(k));
  double freq = std::numbers::pi / 2.0;
  for (std::size_t j = 0; j < k; ++j) {
    out[2 * j] = norm * std::cos(freq * x);
    out[2 * j + 1] = norm * std::sin(freq * x);
    freq /= 2.0;
  }
  return out;
}

std::vector<double> phi_four(double x, std::size_t p) {
  if (p < 2) throw std::invalid_argument("phi_four needs p >= 2");
  const double pd = static_cast<double>(p);
  std::vector<double> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double phase = 2.0 * std::numbers::pi * ((pd - 1.0) * x / pd - static_cast<double>(j) / pd);
    std::complex<double> sum = 0.0;
    for (std::size_t k = 0; k < p; ++k) sum += std::polar(1.0, phase * static_cast<double>(k));
    out[j] = std::abs(sum) / pd;
  }
  return out;
}

std::vector<double> embed_value(double x, const EmbeddingSpec& spec) {
  return spec.kind == EmbeddingKind::trigonometric ? phi_trig(x, spec.physical_dim / 2)
                                                   : phi_four(x, spec.physical_dim);
}

ProductState embed_sample(std::span<const double> x, const EmbeddingSpec& spec) {
  if (x.empty()) throw std::invalid_argument("cannot embed an empty sample");
  spec.validate();
  ProductState state;
  state.factors.reserve(x.size());
  for (double v : x) state.factors.emplace_back(Shape{spec.physical_dim}, embed_value(v, spec));
  return state;
}

}  // namespace tnad
