#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "intformer/autodiff.hpp"
#include "intformer/datamodel.hpp"
#include "intformer/models.hpp"

namespace intformer {

// Per-feature z-score statistics, fit on training windows only.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-8

  static Normalizer fit(const std::vector<LabeledWindow>& windows);
  Tensor apply(const Tensor& window) const;
  Tensor invert(const Tensor& window) const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  int early_stop_patience = 0;  // 0 disables early stopping

  void validate() const;
};

// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-12, 1-1e-12].
Var bce_loss(Tape& tape, Var probability, double label);
double bce_loss_value(double probability, double label);

struct AdamState {
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
  int step = 0;
};

// One bias-corrected Adam update over the named parameter set.
void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state,
               double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

struct TrainResult {
  std::vector<double> epoch_losses;  // mean train loss per epoch
  int epochs_run = 0;
};

// Seeded shuffled mini-batches with dropout active; deterministic for a
// fixed (data, config, seed). Windows are normalized with the supplied
// normalizer, which must have been fit on these training windows.
TrainResult train(Model& model, const std::vector<LabeledWindow>& train_windows,
                  const Normalizer& normalizer, const TrainConfig& config);

}  // namespace intformer
