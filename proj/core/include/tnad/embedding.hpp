#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tnad/tensor.hpp"

namespace tnad {

enum class EmbeddingKind { trigonometric, fourier };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view name);

/// Per-feature map phi: R -> R^p. Trigonometric maps need an even p.
struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::trigonometric;
  std::size_t physical_dim = 2;

  void validate() const;
  friend bool operator==(const EmbeddingSpec&, const EmbeddingSpec&) = default;
};

/// (1/sqrt k) (cos(pi x/2), sin(pi x/2), ..., cos(pi x/2^k), sin(pi x/2^k))
std::vector<double> phi_trig(double x, std::size_t k);

/// Component j: (1/p) |sum_k exp(2 pi i k ((p-1)x/p - j/p))|. Maps the grid
/// {0, 1/(p-1), ..., 1} onto the standard basis; period p/(p-1).
std::vector<double> phi_four(double x, std::size_t p);

std::vector<double> embed_value(double x, const EmbeddingSpec& spec);

/// phi(x_1) (x) ... (x) phi(x_N), kept as its N factors.
struct ProductState {
  std::vector<DenseTensor> factors;

  std::size_t sites() const { return factors.size(); }
  std::size_t physical_dim() const { return factors.empty() ? 0 : factors.front().size(); }
};

ProductState embed_sample(std::span<const double> x, const EmbeddingSpec& spec);

}  // namespace tnad
