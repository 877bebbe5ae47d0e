#include "tnad/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "tnad/grad_tape.hpp"
#include "tnad/rng.hpp"

namespace tnad {

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(cold_lr > 0.0) || !(main_lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (!(decay_rate >= 0.0)) throw std::invalid_argument("decay_rate must be >= 0");
  if (!(init_stddev > 0.0)) throw std::invalid_argument("init_stddev must be positive");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  if (epoch < cold_epochs) return cold_lr;
  return main_lr * std::exp(-decay_rate * static_cast<double>(epoch - cold_epochs));
}

namespace {

std::vector<DenseTensor> zeros_like(const MpoModel& model) {
  std::vector<DenseTensor> out;
  out.reserve(model.shape().sites);
  for (const auto& c : model.cores()) out.emplace_back(c.shape());
  return out;
}

struct SampleResult {
  LogValue dlog;
  std::vector<DenseTensor> grad;  // only filled on the threaded path
  std::exception_ptr error;
};

// Decision log of one sample and, when `grad` is non-null, weight * its gradient added into grad.
LogValue sample_pass(const MpoModel& model, const ProductState& state, std::size_t batch,
                     std::vector<DenseTensor>* grad) {
  GradTape tape;
  const auto root = record_decision(tape, model, state);
  const LogValue lv = tape.log_value(root);
  if (grad != nullptr && !lv.is_zero) {
    const double weight = 2.0 * (lv.value - 1.0) / static_cast<double>(batch);
    tape.backward(root, weight, *grad);
  }
  return lv;
}

void finish_loss(BatchLoss& out, const std::vector<LogValue>& dlogs, const LogValue& fnorm, double alpha,
                 SentinelPolicy policy) {
  out.decision_logs.clear();
  double sum = 0.0;
  for (std::size_t i = 0; i < dlogs.size(); ++i) {
    double d = dlogs[i].value;
    if (dlogs[i].is_zero) {
      if (policy == SentinelPolicy::error)
        throw LossError(i, "sample " + std::to_string(i) + " of the batch has a zero projection");
      d = kClampedDecisionLog;
      ++out.clamped;
    }
    out.decision_logs.push_back(d);
    sum += (d - 1.0) * (d - 1.0);
  }
  out.data_term = sum / static_cast<double>(dlogs.size());
  out.fnorm_log = fnorm.value;
  out.penalty_term = fnorm.is_zero ? 0.0 : alpha * std::max(0.0, fnorm.value);
  out.loss = out.data_term + out.penalty_term;
}

}  // namespace

BatchLoss batch_loss(const MpoModel& model, std::span<const ProductState> batch, double alpha,
                     SentinelPolicy policy) {
  if (batch.empty()) throw std::invalid_argument("batch_loss needs a non-empty batch");
  std::vector<LogValue> dlogs;
  dlogs.reserve(batch.size());
  for (const auto& s : batch) dlogs.push_back(decision_log(model, s));
  BatchLoss out;
  finish_loss(out, dlogs, fnorm_log(model), alpha, policy);
  return out;
}

std::vector<DenseTensor> LossGradient::total() const {
  std::vector<DenseTensor> out = data_grad;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += penalty_grad[i];
  return out;
}

LossGradient loss_gradient(const MpoModel& model, std::span<const ProductState> batch, double alpha,
                           SentinelPolicy policy, std::size_t threads) {
  if (batch.empty()) throw std::invalid_argument("loss_gradient needs a non-empty batch");
  LossGradient out;
  out.data_grad = zeros_like(model);
  out.penalty_grad = zeros_like(model);
  const std::size_t n = batch.size();
  std::vector<LogValue> dlogs(n);

  if (threads <= 1 || n == 1) {
    std::vector<DenseTensor> grad;
    for (std::size_t i = 0; i < n; ++i) {
      grad = zeros_like(model);
      dlogs[i] = sample_pass(model, batch[i], n, &grad);
      if (dlogs[i].is_zero) {
        if (policy == SentinelPolicy::error)
          throw LossError(i, "sample " + std::to_string(i) + " of the batch has a zero projection");
        continue;
      }
      for (std::size_t c = 0; c < out.data_grad.size(); ++c) out.data_grad[c] += grad[c];
    }
  } else {
    std::vector<SampleResult> results(n);
    {
      std::vector<std::jthread> workers;
      const std::size_t t = std::min(threads, n);
      for (std::size_t w = 0; w < t; ++w) {
        workers.emplace_back([&, w] {
          for (std::size_t i = w; i < n; i += t) {
            try {
              results[i].grad = zeros_like(model);
              results[i].dlog = sample_pass(model, batch[i], n, &results[i].grad);
            } catch (...) {
              results[i].error = std::current_exception();
            }
          }
        });
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (results[i].error) std::rethrow_exception(results[i].error);
      dlogs[i] = results[i].dlog;
      if (dlogs[i].is_zero) {
        if (policy == SentinelPolicy::error)
          throw LossError(i, "sample " + std::to_string(i) + " of the batch has a zero projection");
        continue;
      }
      for (std::size_t c = 0; c < out.data_grad.size(); ++c) out.data_grad[c] += results[i].grad[c];
    }
  }

  GradTape tape;
  const auto root = record_fnorm(tape, model);
  const LogValue fnorm = tape.log_value(root);
  if (!fnorm.is_zero && fnorm.value > 0.0 && alpha > 0.0) tape.backward(root, alpha, out.penalty_grad);

  finish_loss(out.loss, dlogs, fnorm, alpha, policy);
  return out;
}

OptimizerState OptimizerState::for_model(const MpoModel& model) {
  return {zeros_like(model), zeros_like(model), 0};
}

void adam_step(MpoModel& model, std::span<const DenseTensor> grads, OptimizerState& state, double lr,
               const AdamParams& params) {
  auto& cores = model.mutable_cores();
  if (grads.size() != cores.size() || state.first_moment.size() != cores.size() ||
      state.second_moment.size() != cores.size())
    throw ShapeError("adam_step: gradient count does not match the model");
  for (std::size_t c = 0; c < cores.size(); ++c)
    if (grads[c].shape() != cores[c].shape() || state.first_moment[c].shape() != cores[c].shape() ||
        state.second_moment[c].shape() != cores[c].shape())
      throw ShapeError("adam_step: gradient shape mismatch at core " + std::to_string(c));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(params.beta1, t);
  const double bias2 = 1.0 - std::pow(params.beta2, t);
  for (std::size_t c = 0; c < cores.size(); ++c) {
    auto theta = cores[c].data();
    auto m = state.first_moment[c].data();
    auto v = state.second_moment[c].data();
    auto g = grads[c].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = params.beta1 * m[i] + (1.0 - params.beta1) * g[i];
      v[i] = params.beta2 * v[i] + (1.0 - params.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + params.epsilon);
    }
  }
}

std::string format_epoch(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "epoch %zu loss %.10g mean_dlog %.10g fnorm_log %.10g lr %.6g", r.epoch, r.loss,
                r.mean_dlog, r.fnorm_log, r.lr);
  return buf;
}

namespace {

bool all_finite(const std::vector<DenseTensor>& ts) {
  return std::all_of(ts.begin(), ts.end(), [](const DenseTensor& t) { return t.all_finite(); });
}

}  // namespace

TrainResult train_from(MpoModel initial, std::span<const std::vector<double>> samples,
                       const EmbeddingSpec& embedding, const TrainConfig& cfg,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  embedding.validate();
  if (samples.empty()) throw std::invalid_argument("training set is empty");
  const std::size_t n_features = initial.shape().sites;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].size() != n_features)
      throw std::invalid_argument("sample " + std::to_string(i) + " has " + std::to_string(samples[i].size()) +
                                  " features, model has " + std::to_string(n_features) + " sites");
  if (embedding.physical_dim != initial.shape().physical_dim)
    throw std::invalid_argument("embedding dimension does not match the model");

  TrainResult result{std::move(initial), {}, 0};
  MpoModel& model = result.model;
  OptimizerState opt = OptimizerState::for_model(model);
  std::mt19937_64 shuffle_gen(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<ProductState> batch;
  for (std::size_t epoch = 0; epoch < cfg.total_epochs(); ++epoch) {
    const double lr = cfg.learning_rate(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_gen);
    double loss_sum = 0.0, dlog_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++step) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(embed_sample(samples[order[k]], embedding));

      const LossGradient g = loss_gradient(model, batch, cfg.alpha, SentinelPolicy::clamp, cfg.threads);
      const auto grads = g.total();
      if (!std::isfinite(g.loss.loss) || !all_finite(grads))
        throw NanAbort(epoch + 1, step + 1,
                       "non-finite loss or gradient at epoch " + std::to_string(epoch + 1) + ", step " +
                           std::to_string(step + 1));
      adam_step(model, grads, opt, lr, cfg.adam);
      if (!all_finite(model.mutable_cores()))
        throw NanAbort(epoch + 1, step + 1,
                       "non-finite parameters after epoch " + std::to_string(epoch + 1) + ", step " +
                           std::to_string(step + 1));

      result.clamped_samples += g.loss.clamped;
      loss_sum += g.loss.loss * static_cast<double>(end - begin);
      for (double d : g.loss.decision_logs) dlog_sum += d;
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.loss = loss_sum / static_cast<double>(samples.size());
    rec.mean_dlog = dlog_sum / static_cast<double>(samples.size());
    const LogValue fn = fnorm_log(model);
    rec.fnorm_log = fn.value;
    if (fn.is_zero || !std::isfinite(fn.value))
      throw NanAbort(epoch + 1, step, "F-norm of the model vanished at epoch " + std::to_string(epoch + 1));
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

TrainResult train(std::span<const std::vector<double>> samples, const MpoShape& shape,
                  const EmbeddingSpec& embedding, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  return train_from(init_mpo(shape, cfg.init_stddev, derive_seed(cfg.seed, "init")), samples, embedding, cfg,
                    on_epoch);
}

}  // namespace tnad
