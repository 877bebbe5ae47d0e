#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "tnad/embedding.hpp"
#include "tnad/mpo.hpp"

namespace tnad {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// A trained model together with the embedding it was trained under.
struct SavedModel {
  MpoModel model;
  EmbeddingSpec embedding;
};

// Binary layout, all integers little-endian uint32:
//   "TNAD" magic, format version, N, p, b, S, embedding kind (0 trig, 1 fourier), embedding p
//   then per site: site index, 4 axis sizes (output size 0 when the site has no
//   output leg), entries as little-endian IEEE-754 doubles in row-major order.
void write_model(std::ostream& os, const MpoModel& model, const EmbeddingSpec& embedding);
SavedModel read_model(std::istream& is);

void save_model(const std::filesystem::path& path, const MpoModel& model, const EmbeddingSpec& embedding);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace tnad
