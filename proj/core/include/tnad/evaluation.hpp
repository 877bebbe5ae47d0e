#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnad/data_io.hpp"
#include "tnad/embedding.hpp"
#include "tnad/mpo.hpp"
#include "tnad/training.hpp"

namespace tnad {

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Test scores (decision logs, larger = more normal) with ground truth.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<Label> labels;
};

/// P(score of a random normal sample > score of a random anomaly), ties
/// counted half. Rank-sum formulation with midranks.
double auroc(const ScoredSet& s);

/// ROC curve treating "normal" as the positive class, swept from the highest
/// score down; starts at (0, 0) and ends at (1, 1). Tied scores form one step.
struct RocPoint {
  double fpr;
  double tpr;
};
std::vector<RocPoint> roc_curve(const ScoredSet& s);

/// Decision logs of raw feature rows under `embedding`; zero projections score -inf.
std::vector<double> score_samples(const MpoModel& model, const EmbeddingSpec& embedding,
                                  std::span<const std::vector<double>> rows);

/// Hyperparameters of one detector, minus the site count which comes from the data.
struct DetectorSettings {
  std::size_t physical_dim = 2;
  std::size_t bond_dim = 5;
  std::size_t spacing = 1;
  EmbeddingKind embedding = EmbeddingKind::trigonometric;
  TrainConfig train;
  /// Retries with a fresh training seed after a NanAbort.
  std::size_t max_retries = 0;

  MpoShape shape_for(std::size_t sites) const { return {sites, physical_dim, bond_dim, spacing}; }
  EmbeddingSpec embedding_spec() const { return {embedding, physical_dim}; }
};

/// Train/test partition of a one-class tabular protocol (indices into the dataset).
struct OneClassSplit {
  std::vector<std::size_t> train;        // half of the normal rows
  std::vector<std::size_t> test_normal;  // the other half (gets the odd row)
  std::vector<std::size_t> test_anomalous;
};

/// Seeded uniform permutation of the normal rows cut in half.
OneClassSplit split_normals(const TabularDataset& data, std::uint64_t seed);

struct RunResult {
  double auroc = 0.0;
  ScoredSet scored;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
  std::size_t attempts = 1;
  std::uint64_t train_seed = 0;
  std::optional<MpoModel> model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Train on one half of the normal rows (standardized with that half's
/// statistics), score the other half plus every anomaly.
RunResult run_odds(const TabularDataset& data, const DetectorSettings& settings, std::uint64_t seed,
                   const EpochCallback& on_epoch = {});

/// Train on every training image of `inlier_class`, score the full test set.
RunResult run_one_class_image(const ImageDataset& train_images, const ImageDataset& test_images,
                              int inlier_class, const DetectorSettings& settings, std::uint64_t seed,
                              const EpochCallback& on_epoch = {});

/// Training seed of attempt `attempt` (0 = the run seed itself).
std::uint64_t attempt_seed(std::uint64_t seed, std::size_t attempt);

/// Runs train() with the retry policy of `settings`. Rethrows the last
/// NanAbort once every attempt has failed.
TrainResult train_with_retries(std::span<const std::vector<double>> rows, std::size_t sites,
                               const DetectorSettings& settings, std::uint64_t seed, std::size_t& attempts,
                               const EpochCallback& on_epoch = {});

struct TrialSummary {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n); 0 for one trial
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

TrialSummary summarize_trials(std::span<const double> aurocs, std::size_t failed);

inline constexpr const char* kResultsHeader = "dataset,inlier_class,seed,auroc,n_train,n_test,epochs,wall_seconds";

std::string format_result_row(const std::string& dataset, const std::string& inlier_class, std::uint64_t seed,
                              double auroc, std::size_t n_train, std::size_t n_test, std::size_t epochs,
                              double wall_seconds);

}  // namespace tnad
