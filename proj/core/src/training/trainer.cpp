#include "taskgraph/training/trainer.hpp"

#include "taskgraph/dataset/splits.hpp"
#include "taskgraph/errors.hpp"

#include <chrono>
#include <cmath>

namespace taskgraph {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(beta_mse > 0)) throw ConfigError("beta_mse must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (eval_epoch < 0 || eval_epoch > epochs) throw ConfigError("eval epoch out of range");
  if (eval_every < 0) throw ConfigError("eval cadence must be >= 0");
  const auto& o = optimizer;
  if (!(o.lr > 0) || o.beta1 < 0 || o.beta1 >= 1 || o.beta2 < 0 || o.beta2 >= 1 || !(o.eps > 0) ||
      o.weight_decay < 0) {
    throw ConfigError("invalid optimizer settings");
  }
}

LossBreakdown batch_loss(const Model& model, const std::vector<const GraphSlice*>& batch,
                         const ClassWeights& weights, double beta_mse, bool teacher_forcing,
                         nn::GradBuffer* grads) {
  const LossNormalizer norm = loss_normalizer(batch, weights);
  LossBreakdown total;
  for (const GraphSlice* s : batch) {
    nn::Tape tape(&model.params());
    tape.set_grad_enabled(grads != nullptr);
    const Prediction pred = model.forward(tape, *s, teacher_forcing);
    nn::Var loss = joint_loss(pred, *s, weights, norm, beta_mse, &total);
    if (!std::isfinite(loss.scalar())) throw NumericError("non-finite loss");
    if (grads != nullptr) {
      tape.backward(loss);
      tape.accumulate_param_grads(*grads);
    }
  }
  return total;
}

namespace {

LossBreakdown scaled(LossBreakdown b, double s) {
  for (double& v : b.ce) v *= s;
  b.mse *= s;
  b.total *= s;
  return b;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<const GraphSlice*>& train,
                        const std::vector<const GraphSlice*>& validation,
                        const ClassWeights& weights, const TrainConfig& cfg,
                        std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ConfigError("empty training set");
  TrainResult result;
  result.optimizer = nn::OptimizerState::create(model.params(), cfg.optimizer);
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;
    try {
      const auto order = batches(train.size(), cfg.batch_size, shuffle_seed, epoch);
      for (const auto& idx : order) {
        std::vector<const GraphSlice*> batch;
        batch.reserve(idx.size());
        for (std::size_t i : idx) batch.push_back(train[i]);
        nn::GradBuffer grads(model.params().size());
        log.train += batch_loss(model, batch, weights, cfg.beta_mse, cfg.teacher_forcing, &grads);
        if (!std::isfinite(grads.squared_norm())) throw NumericError("non-finite gradient");
        nn::adamw_step(model.params(), grads, result.optimizer);
      }
      log.train = scaled(log.train, 1.0 / static_cast<double>(order.size()));

      const bool validate_now =
          !validation.empty() && cfg.eval_every > 0 &&
          (epoch % cfg.eval_every == 0 || epoch == cfg.epochs || epoch == cfg.reported_epoch());
      if (validate_now) {
        log.validation =
            batch_loss(model, validation, weights, cfg.beta_mse, cfg.teacher_forcing, nullptr);
        log.metrics = evaluate(model, validation);
      }
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double score = log.validation ? log.validation->total : log.train.total;
    if (validation.empty() || log.validation) {
      if (!have_best || score < result.best_loss) {
        have_best = true;
        result.best_loss = score;
        result.best_epoch = epoch;
        result.best_params = model.params();
      }
    }
    if (epoch == cfg.reported_epoch()) result.eval_params = model.params();
    result.epochs.push_back(log);
    if (on_epoch && !on_epoch(result.epochs.back(), model)) break;
  }
  if (result.eval_params.size() == 0) result.eval_params = model.params();
  if (!have_best) result.best_params = model.params();
  return result;
}

TrainResult finetune(Model& model, const std::vector<const GraphSlice*>& train,
                     const std::vector<const GraphSlice*>& validation,
                     const ClassWeights& weights, const TrainConfig& cfg,
                     std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  if (model.params().set_trainable_prefix("encoder.", false) == 0) {
    throw ConfigError("model has no encoder parameters to freeze");
  }
  return train_model(model, train, validation, weights, cfg, shuffle_seed, on_epoch);
}

}  // namespace taskgraph
