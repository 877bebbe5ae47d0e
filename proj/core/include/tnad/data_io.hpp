#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnad {

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw IDX payload: unsigned-byte elements with their dimensions.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

/// Parses a big-endian IDX file of unsigned bytes (type code 0x08), e.g.
/// magic 0x00000803 for images and 0x00000801 for labels. Files ending in
/// ".gz" are decompressed first.
IdxArray read_idx(const std::filesystem::path& path);
IdxArray parse_idx(std::span<const std::uint8_t> raw);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

struct ImageDataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // samples x rows x cols
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span(pixels).subspan(i * rows * cols, rows * cols);
  }
};

ImageDataset read_image_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Scales to [0, 1], applies a 2x2 stride-2 max pool and flattens row-major.
std::vector<double> preprocess_image(std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols);

/// 28x28 grey-scale image -> 196 features.
inline std::vector<double> preprocess_image(std::span<const std::uint8_t> pixels) {
  return preprocess_image(pixels, 28, 28);
}

enum class Label : std::uint8_t { normal = 0, anomalous = 1 };

struct TabularDataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> features;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return feature_names.size(); }
  std::size_t anomaly_count() const;
};

/// CSV with a header row; the `label` column holds 0 (normal) or 1 (anomalous),
/// every other column is a numeric feature.
TabularDataset read_tabular_csv(const std::filesystem::path& path);
TabularDataset parse_tabular_csv(const std::string& text, const std::string& source = "<memory>");

/// Per-feature mean and standard deviation of a training split. Features with
/// zero variance are centred but left unscaled and listed in `constant_features`.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> constant_features;

  static Standardizer fit(std::span<const std::vector<double>> rows);
  std::vector<double> apply(std::span<const double> row) const;
  std::vector<std::vector<double>> apply_all(std::span<const std::vector<double>> rows) const;

  void save(const std::filesystem::path& path) const;
  static Standardizer load(const std::filesystem::path& path);
};

}  // namespace tnad
