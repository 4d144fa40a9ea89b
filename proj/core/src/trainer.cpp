#include "intformer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"
#include "intformer/util.hpp"

namespace intformer {

namespace {
constexpr double kProbabilityFloor = 1e-12;
constexpr double kStddevFloor = 1e-8;
}  // namespace

Normalizer Normalizer::fit(const std::vector<LabeledWindow>& windows) {
  if (windows.empty()) throw ConfigError("normalizer fit on empty window set");
  const std::size_t f = windows[0].features.cols();
  Normalizer out;
  out.mean.assign(f, 0.0);
  out.stddev.assign(f, 0.0);
  std::size_t count = 0;
  for (const auto& w : windows) {
    const std::size_t t = w.features.rows();
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < f; ++j) out.mean[j] += w.features.at(i, j);
    }
    count += t;
  }
  for (std::size_t j = 0; j < f; ++j) out.mean[j] /= static_cast<double>(count);
  for (const auto& w : windows) {
    const std::size_t t = w.features.rows();
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < f; ++j) {
        const double d = w.features.at(i, j) - out.mean[j];
        out.stddev[j] += d * d;
      }
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    out.stddev[j] = std::max(std::sqrt(out.stddev[j] / static_cast<double>(count)),
                             kStddevFloor);
  }
  return out;
}

Tensor Normalizer::apply(const Tensor& window) const {
  const std::size_t f = window.cols();
  if (f != mean.size()) throw DimensionError("normalizer width mismatch");
  Tensor out = window;
  const std::size_t t = window.rows();
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      out.at(i, j) = (out.at(i, j) - mean[j]) / stddev[j];
    }
  }
  return out;
}

Tensor Normalizer::invert(const Tensor& window) const {
  const std::size_t f = window.cols();
  if (f != mean.size()) throw DimensionError("normalizer width mismatch");
  Tensor out = window;
  const std::size_t t = window.rows();
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      out.at(i, j) = out.at(i, j) * stddev[j] + mean[j];
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (optimizer != "adam") throw ConfigError("unsupported optimizer: " + optimizer);
  if (early_stop_patience < 0) throw ConfigError("patience must be >= 0");
}

Var bce_loss(Tape& tape, Var probability, double label) {
  if (label != 0.0 && label != 1.0) throw ConfigError("label must be 0 or 1");
  Var p = tape.clamp(probability, kProbabilityFloor, 1.0 - kProbabilityFloor);
  Var one_minus_p = tape.add_const(tape.neg(p), 1.0);
  Var loss = tape.neg(tape.add(tape.scale(tape.log(p), label),
                               tape.scale(tape.log(one_minus_p), 1.0 - label)));
  return tape.sum_all(loss);
}

double bce_loss_value(double probability, double label) {
  const double p =
      std::clamp(probability, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state,
               double learning_rate, double beta1, double beta2, double eps) {
  ++state.step;
  const double bias1 = 1.0 - std::pow(beta1, state.step);
  const double bias2 = 1.0 - std::pow(beta2, state.step);
  for (auto& [name, value] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw DimensionError("missing gradient for " + name);
    const Tensor& g = git->second;
    if (!g.same_shape(value)) {
      throw DimensionError("gradient shape mismatch for " + name + ": " +
                           g.shape_string() + " vs " + value.shape_string());
    }
    Tensor& m = state.first_moment.try_emplace(name, Tensor::zeros(value.shape()))
                    .first->second;
    Tensor& v = state.second_moment.try_emplace(name, Tensor::zeros(value.shape()))
                    .first->second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

TrainResult train(Model& model, const std::vector<LabeledWindow>& train_windows,
                  const Normalizer& normalizer, const TrainConfig& config) {
  config.validate();
  if (train_windows.empty()) throw ConfigError("training set is empty");

  // Normalize once up front; windows are reused across epochs.
  std::vector<Tensor> inputs;
  std::vector<double> labels;
  inputs.reserve(train_windows.size());
  labels.reserve(train_windows.size());
  for (const auto& w : train_windows) {
    inputs.push_back(normalizer.apply(w.features));
    labels.push_back(static_cast<double>(w.label));
  }

  AdamState adam;
  TrainResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    DetRng shuffle_rng(derive_seed(config.seed, 0x5eedull + epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    const std::size_t batches =
        (order.size() + static_cast<std::size_t>(config.batch_size) - 1) /
        static_cast<std::size_t>(config.batch_size);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * static_cast<std::size_t>(config.batch_size);
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      Tape tape;
      const ParamVars vars = model.bind(tape);
      Var total = tape.constant(Tensor::scalar(0.0));
      const std::uint64_t batch_seed = derive_seed(
          config.seed, (static_cast<std::uint64_t>(epoch) << 24) ^ b ^ 0xd50ull);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        const Var p = model.forward(tape, vars, inputs[idx], Mode::kTrain,
                                    derive_seed(batch_seed, i - begin));
        total = tape.add(total, bce_loss(tape, p, labels[idx]));
      }
      Var mean_loss = tape.scale(total, 1.0 / static_cast<double>(end - begin));
      const double batch_loss = tape.scalar_value(mean_loss);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(b + 1));
      }
      tape.backward(mean_loss);
      std::map<std::string, Tensor> grads;
      for (const auto& [name, var] : vars) grads.emplace(name, tape.grad(var));
      adam_step(model.params(), grads, adam, config.learning_rate);
      epoch_loss += batch_loss * static_cast<double>(end - begin);
      seen += end - begin;
    }
    epoch_loss /= static_cast<double>(seen);
    result.epoch_losses.push_back(epoch_loss);
    result.epochs_run = epoch + 1;

    if (config.early_stop_patience > 0) {
      if (epoch_loss < best_loss - 1e-12) {
        best_loss = epoch_loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= config.early_stop_patience) {
        break;
      }
    }
  }
  return result;
}

}  // namespace intformer
