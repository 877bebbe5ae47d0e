#include "tnad/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "tnad/rng.hpp"

namespace tnad {

double auroc(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size())
    throw std::invalid_argument("score and label counts differ");
  const std::size_t n = s.scores.size();
  std::size_t n_normal = 0;
  for (auto l : s.labels) n_normal += l == Label::normal ? 1 : 0;
  const std::size_t n_anom = n - n_normal;
  if (n_normal == 0 || n_anom == 0) throw UndefinedMetric("AUROC needs both normal and anomalous samples");
  for (double v : s.scores)
    if (std::isnan(v)) throw std::invalid_argument("AUROC scores contain NaN");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  // Midranks are 1-based; ties share the average of the ranks they span.
  double rank_sum_normal = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (s.labels[order[k]] == Label::normal) rank_sum_normal += midrank;
    i = j;
  }
  const double nn = static_cast<double>(n_normal);
  const double u = rank_sum_normal - nn * (nn + 1.0) / 2.0;
  return u / (nn * static_cast<double>(n_anom));
}

std::vector<RocPoint> roc_curve(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) throw std::invalid_argument("score and label counts differ");
  std::size_t n_normal = 0;
  for (auto l : s.labels) n_normal += l == Label::normal ? 1 : 0;
  const std::size_t n_anom = s.labels.size() - n_normal;
  if (n_normal == 0 || n_anom == 0) throw UndefinedMetric("ROC needs both normal and anomalous samples");

  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });

  std::vector<RocPoint> out{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
      (s.labels[order[j]] == Label::normal ? tp : fp) += 1;
      ++j;
    }
    out.push_back({static_cast<double>(fp) / static_cast<double>(n_anom),
                   static_cast<double>(tp) / static_cast<double>(n_normal)});
    i = j;
  }
  return out;
}

std::vector<double> score_samples(const MpoModel& model, const EmbeddingSpec& embedding,
                                  std::span<const std::vector<double>> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != model.shape().sites)
      throw std::invalid_argument("sample has " + std::to_string(r.size()) + " features, model has N = " +
                                  std::to_string(model.shape().sites));
    out.push_back(decision_log(model, embed_sample(r, embedding)).value);
  }
  return out;
}

OneClassSplit split_normals(const TabularDataset& data, std::uint64_t seed) {
  OneClassSplit split;
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < data.size(); ++i)
    (data.labels[i] == Label::normal ? normal : split.test_anomalous).push_back(i);
  if (normal.size() < 2) throw std::invalid_argument("one-class split needs at least 2 normal samples");
  std::mt19937_64 gen(derive_seed(seed, "split"));
  std::shuffle(normal.begin(), normal.end(), gen);
  const std::size_t half = normal.size() / 2;
  split.train.assign(normal.begin(), normal.begin() + static_cast<std::ptrdiff_t>(half));
  split.test_normal.assign(normal.begin() + static_cast<std::ptrdiff_t>(half), normal.end());
  return split;
}

std::uint64_t attempt_seed(std::uint64_t seed, std::size_t attempt) {
  return attempt == 0 ? seed : derive_seed(seed, "retry-" + std::to_string(attempt));
}

TrainResult train_with_retries(std::span<const std::vector<double>> rows, std::size_t sites,
                               const DetectorSettings& settings, std::uint64_t seed, std::size_t& attempts,
                               const EpochCallback& on_epoch) {
  attempts = 0;
  for (std::size_t attempt = 0;; ++attempt) {
    TrainConfig cfg = settings.train;
    cfg.seed = attempt_seed(seed, attempt);
    ++attempts;
    try {
      return train(rows, settings.shape_for(sites), settings.embedding_spec(), cfg, on_epoch);
    } catch (const NanAbort&) {
      if (attempt >= settings.max_retries) throw;
    }
  }
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunResult run_odds(const TabularDataset& data, const DetectorSettings& settings, std::uint64_t seed,
                   const EpochCallback& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  const OneClassSplit split = split_normals(data, seed);

  std::vector<std::vector<double>> train_rows;
  for (auto i : split.train) train_rows.push_back(data.features[i]);
  const Standardizer standardizer = Standardizer::fit(train_rows);
  train_rows = standardizer.apply_all(train_rows);

  RunResult out;
  std::vector<std::vector<double>> test_rows;
  for (auto i : split.test_normal) {
    test_rows.push_back(standardizer.apply(data.features[i]));
    out.scored.labels.push_back(Label::normal);
  }
  for (auto i : split.test_anomalous) {
    test_rows.push_back(standardizer.apply(data.features[i]));
    out.scored.labels.push_back(Label::anomalous);
  }

  TrainResult trained = train_with_retries(train_rows, data.feature_count(), settings, seed, out.attempts, on_epoch);
  out.train_seed = attempt_seed(seed, out.attempts - 1);
  out.scored.scores = score_samples(trained.model, settings.embedding_spec(), test_rows);
  out.auroc = auroc(out.scored);
  out.n_train = train_rows.size();
  out.n_test = test_rows.size();
  out.epochs = settings.train.total_epochs();
  out.history = std::move(trained.history);
  out.model = std::move(trained.model);
  out.wall_seconds = seconds_since(t0);
  return out;
}

RunResult run_one_class_image(const ImageDataset& train_images, const ImageDataset& test_images,
                              int inlier_class, const DetectorSettings& settings, std::uint64_t seed,
                              const EpochCallback& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  if (inlier_class < 0 || inlier_class > 9) throw std::invalid_argument("inlier class must be in 0..9");
  std::vector<std::vector<double>> train_rows;
  for (std::size_t i = 0; i < train_images.size(); ++i)
    if (train_images.labels[i] == inlier_class)
      train_rows.push_back(preprocess_image(train_images.image(i), train_images.rows, train_images.cols));
  if (train_rows.empty())
    throw std::invalid_argument("no training images of class " + std::to_string(inlier_class));

  RunResult out;
  std::vector<std::vector<double>> test_rows;
  for (std::size_t i = 0; i < test_images.size(); ++i) {
    test_rows.push_back(preprocess_image(test_images.image(i), test_images.rows, test_images.cols));
    out.scored.labels.push_back(test_images.labels[i] == inlier_class ? Label::normal : Label::anomalous);
  }

  const std::size_t sites = train_rows.front().size();
  TrainResult trained = train_with_retries(train_rows, sites, settings, seed, out.attempts, on_epoch);
  out.train_seed = attempt_seed(seed, out.attempts - 1);
  out.scored.scores = score_samples(trained.model, settings.embedding_spec(), test_rows);
  out.auroc = auroc(out.scored);
  out.n_train = train_rows.size();
  out.n_test = test_rows.size();
  out.epochs = settings.train.total_epochs();
  out.history = std::move(trained.history);
  out.model = std::move(trained.model);
  out.wall_seconds = seconds_since(t0);
  return out;
}

TrialSummary summarize_trials(std::span<const double> aurocs, std::size_t failed) {
  TrialSummary s;
  s.succeeded = aurocs.size();
  s.failed = failed;
  if (aurocs.empty()) return s;
  s.mean = std::accumulate(aurocs.begin(), aurocs.end(), 0.0) / static_cast<double>(aurocs.size());
  if (aurocs.size() > 1) {
    double ss = 0.0;
    for (double a : aurocs) ss += (a - s.mean) * (a - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(aurocs.size() - 1));
    s.std_error = sd / std::sqrt(static_cast<double>(aurocs.size()));
  }
  return s;
}

std::string format_result_row(const std::string& dataset, const std::string& inlier_class, std::uint64_t seed,
                              double auroc, std::size_t n_train, std::size_t n_test, std::size_t epochs,
                              double wall_seconds) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.6f,%zu,%zu,%zu,%.3f", dataset.c_str(), inlier_class.c_str(),
                static_cast<unsigned long long>(seed), auroc, n_train, n_test, epochs, wall_seconds);
  return buf;
}

}  // namespace tnad
