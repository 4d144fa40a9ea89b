#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "intformer/tensor.hpp"

namespace intformer {

// Black-box scalar model over a [T x F] window.
using WindowModelFn = std::function<double(const Tensor&)>;

// Exact Shapley values by subset enumeration. Players are the (timestep,
// feature) cells of the window; players outside a coalition are replaced by
// the baseline cell (training means). At most 12 players (2^n evaluations).
std::vector<double> shapley_exact(const WindowModelFn& model, const Tensor& window,
                                  const Tensor& baseline);

struct SampledShapley {
  std::vector<double> values;
  std::vector<double> stderrs;
  // |sum(values) - (f(window) - f(baseline))|
  double efficiency_residual = 0.0;
};

// Unbiased Monte-Carlo permutation estimate of the same quantity;
// deterministic under seed.
SampledShapley shapley_sampled(const WindowModelFn& model, const Tensor& window,
                               const Tensor& baseline, int n_permutations,
                               std::uint64_t seed);

// Per-window attributions for a set of explained windows sharing a feature
// roster. Cell (t, j) of shap_values[w] attributes window w's prediction to
// feature j at timestep t.
struct AttributionReport {
  int timesteps = 0;
  std::vector<std::string> feature_names;
  std::vector<int> window_ids;
  std::vector<Tensor> shap_values;     // each [T x F]
  std::vector<Tensor> feature_values;  // each [T x F], raw feature scale

  // Global importance of a (timestep, feature) cell: mean |shap| across
  // explained windows.
  double mean_abs_shap(int timestep, std::size_t feature) const;
};

struct SummaryRow {
  int timestep = 0;
  int rank = 0;  // 1-based within its timestep
  std::string feature;
  double mean_abs_shap = 0.0;
  int window_id = 0;
  double shap_value = 0.0;
  double feature_value = 0.0;
};

// Per timestep, the top-k features by mean |shap| with per-window
// (shap, value) pairs: the table behind a beeswarm summary plot.
std::vector<SummaryRow> summary_export(const AttributionReport& report, int top_k = 10,
                                       bool split_by_timestep = true);

}  // namespace intformer
