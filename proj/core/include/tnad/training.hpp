#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnad/embedding.hpp"
#include "tnad/mpo.hpp"

namespace tnad {

/// Published Adam defaults.
struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double alpha = 0.4;
  std::size_t batch_size = 32;
  std::size_t cold_epochs = 20;
  double cold_lr = 2e-5;
  std::size_t main_epochs = 280;
  double main_lr = 2e-3;
  double decay_rate = 0.01;  // per epoch of the main phase
  double init_stddev = 0.5;
  std::uint64_t seed = 0;
  AdamParams adam;
  std::size_t threads = 1;  // per-sample parallelism inside a batch

  void validate() const;
  std::size_t total_epochs() const { return cold_epochs + main_epochs; }
  /// Learning rate of 0-based epoch `epoch` over both phases.
  double learning_rate(std::size_t epoch) const;
};

/// A batch contained a sample whose projection is exactly zero.
class LossError : public std::domain_error {
 public:
  LossError(std::size_t sample, const std::string& what) : std::domain_error(what), sample_index(sample) {}
  std::size_t sample_index;
};

/// Training produced a non-finite loss, gradient or parameter.
class NanAbort : public std::runtime_error {
 public:
  NanAbort(std::size_t epoch, std::size_t step, const std::string& what)
      : std::runtime_error(what), epoch(epoch), step(step) {}
  std::size_t epoch;  // 1-based
  std::size_t step;   // 1-based within the epoch
};

/// Stand-in log value for zero projections when SentinelPolicy::clamp is used.
inline constexpr double kClampedDecisionLog = -30.0;

enum class SentinelPolicy {
  error,  // throw LossError
  clamp,  // use kClampedDecisionLog, drop the sample's gradient, count it
};

struct BatchLoss {
  double loss = 0.0;
  double data_term = 0.0;     // mean of (decision_log - 1)^2
  double penalty_term = 0.0;  // alpha * max(0, fnorm_log)
  double fnorm_log = 0.0;
  std::vector<double> decision_logs;
  std::size_t clamped = 0;
};

/// (1/B) sum_i (log ||P Phi(x_i)||^2 - 1)^2 + alpha * ReLU(log ||P||_F^2)
BatchLoss batch_loss(const MpoModel& model, std::span<const ProductState> batch, double alpha,
                     SentinelPolicy policy = SentinelPolicy::error);

struct LossGradient {
  BatchLoss loss;
  std::vector<DenseTensor> data_grad;     // per core
  std::vector<DenseTensor> penalty_grad;  // per core, already weighted by alpha

  std::vector<DenseTensor> total() const;
};

/// Reverse-mode gradient of batch_loss with respect to every core entry.
/// Per-sample adjoints are reduced in sample order regardless of `threads`.
LossGradient loss_gradient(const MpoModel& model, std::span<const ProductState> batch, double alpha,
                           SentinelPolicy policy = SentinelPolicy::error, std::size_t threads = 1);

struct OptimizerState {
  std::vector<DenseTensor> first_moment;
  std::vector<DenseTensor> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_model(const MpoModel& model);
};

/// One bias-corrected Adam update of every core.
void adam_step(MpoModel& model, std::span<const DenseTensor> grads, OptimizerState& state, double lr,
               const AdamParams& params = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double mean_dlog = 0.0;
  double fnorm_log = 0.0;
  double lr = 0.0;
};

/// `epoch <n> loss <v> mean_dlog <v> fnorm_log <v> lr <v>`
std::string format_epoch(const EpochRecord& record);

struct TrainResult {
  MpoModel model;
  std::vector<EpochRecord> history;
  std::size_t clamped_samples = 0;
};

/// Cold phase at a fixed rate, then an exponentially decaying main phase.
/// Samples are reshuffled every epoch; the last partial batch is kept.
/// Throws NanAbort on the first non-finite step.
TrainResult train(std::span<const std::vector<double>> samples, const MpoShape& shape,
                  const EmbeddingSpec& embedding, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// As train(), starting from `initial` instead of a seeded initialization.
TrainResult train_from(MpoModel initial, std::span<const std::vector<double>> samples,
                       const EmbeddingSpec& embedding, const TrainConfig& cfg,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace tnad
