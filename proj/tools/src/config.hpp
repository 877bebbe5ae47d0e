#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnad/evaluation.hpp"

namespace tnad::cli {

/// Invalid configuration; the message names the field and the reason.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { tabular, images };

struct ExperimentConfig {
  std::string name = "run";
  DatasetKind kind = DatasetKind::tabular;
  std::filesystem::path data_path;  // tabular CSV
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  int inlier_class = 0;
  /// "half": one-class protocol split of the normal rows; "all": every normal row.
  std::string train_split = "half";

  EmbeddingKind embedding = EmbeddingKind::trigonometric;
  std::optional<std::size_t> sites;  // empty = from data
  std::optional<std::size_t> physical_dim;  // empty = auto
  std::optional<std::size_t> spacing;       // empty = auto
  std::size_t bond_dim = 5;
  /// Empty = chosen so that the expected squared F-norm at initialization is 1.
  std::optional<double> init_stddev = 0.5;

  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::size_t max_retries = 0;
  std::filesystem::path out_dir;
  bool write_roc = false;

  /// Keys that are carried through but not interpreted (manifest.*).
  std::map<std::string, std::string> extra;
};

/// Flat `key = value` text with `#` comments. Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes a config that parse_config() reads back to the same settings.
std::string format_config(const ExperimentConfig& cfg);

struct Resolution {
  MpoShape shape;
  double init_stddev = 0.5;
  std::vector<std::string> notes;  // what `auto` resolved to
};

/// S = floor(N/25) + 1, then the smallest p >= 2 allowed by the embedding with
/// 1e4 <= p^q <= 1e12.
Resolution resolve(const ExperimentConfig& cfg, std::size_t data_sites);

/// sigma with E||P||_F^2 = 1 for i.i.d. normal(0, sigma^2) cores.
double unit_fnorm_stddev(const MpoShape& shape);

std::optional<std::size_t> auto_physical_dim(std::size_t sites, std::size_t spacing, EmbeddingKind kind);

DetectorSettings detector_settings(const ExperimentConfig& cfg, const Resolution& res);

}  // namespace tnad::cli
