#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace tnad::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNanAbort = 4,
  kExitAllFailed = 5,
};

inline constexpr const char* kOutDirEnv = "TNAD_OUT_DIR";

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Overrides from the command line; empty fields leave the config alone.
struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::size_t jobs = 1;
};

/// --out, then the config's out_dir, then $TNAD_OUT_DIR, then ./tnad_out.
std::filesystem::path output_dir(const RunOptions& opts, const ExperimentConfig& cfg);

/// SHA-1 of "blob <size>\0" followed by the file bytes, as hex.
std::string git_blob_sha1(const std::filesystem::path& path);

/// Parses "1,2,3".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Writes model.tnad, history.log, manifest.cfg (and standardizer.csv for tabular data).
int cmd_train(const std::filesystem::path& config, const RunOptions& opts, Streams io);

/// Prints `index,decision_log` per sample. Tabular rows are standardized with
/// `standardizer` or, when absent, a standardizer.csv next to the model.
int cmd_score(const std::filesystem::path& model, const std::filesystem::path& data,
              const std::optional<std::filesystem::path>& standardizer, Streams io);

// Writes results.csv, summary.txt, manifest.cfg, per-seed history and optional ROC files.
int cmd_evaluate(const std::filesystem::path& config, const RunOptions& opts, Streams io);

int cmd_inspect(const std::filesystem::path& model, Streams io);

}  // namespace tnad::cli
