#include "intformer/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"

namespace intformer {

namespace {

Tensor blend(const Tensor& window, const Tensor& baseline, std::uint32_t mask) {
  Tensor mixed = baseline;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (mask & (1u << i)) mixed[i] = window[i];
  }
  return mixed;
}

void check_aligned(const Tensor& window, const Tensor& baseline) {
  if (!window.same_shape(baseline)) {
    throw DimensionError("baseline shape " + baseline.shape_string() +
                         " does not match window " + window.shape_string());
  }
}

}  // namespace

std::vector<double> shapley_exact(const WindowModelFn& model, const Tensor& window,
                                  const Tensor& baseline) {
  check_aligned(window, baseline);
  const std::size_t n = window.size();
  if (n == 0) throw DimensionError("no players to attribute");
  if (n > 12) {
    throw SizeError("exact Shapley enumeration is limited to 12 players (" +
                    std::to_string(n) + " requested); use shapley_sampled");
  }
  const std::uint32_t masks = 1u << n;
  std::vector<double> value(masks);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    value[mask] = model(blend(window, baseline, mask));
  }

  std::vector<double> factorial(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) {
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  }

  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
      if (mask & bit) continue;
      const int s = __builtin_popcount(mask);
      const double weight = factorial[static_cast<std::size_t>(s)] *
                            factorial[n - static_cast<std::size_t>(s) - 1] /
                            factorial[n];
      phi[i] += weight * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

SampledShapley shapley_sampled(const WindowModelFn& model, const Tensor& window,
                               const Tensor& baseline, int n_permutations,
                               std::uint64_t seed) {
  check_aligned(window, baseline);
  const std::size_t n = window.size();
  if (n == 0) throw DimensionError("no players to attribute");
  if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");

  DetRng rng(seed);
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int p = 0; p < n_permutations; ++p) {
    rng.shuffle(order);
    Tensor current = baseline;
    double previous = model(current);
    for (std::size_t i : order) {
      current[i] = window[i];
      const double next = model(current);
      const double marginal = next - previous;
      sum[i] += marginal;
      sum_sq[i] += marginal * marginal;
      previous = next;
    }
  }

  SampledShapley out;
  out.values.resize(n);
  out.stderrs.resize(n);
  const double np = static_cast<double>(n_permutations);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = sum[i] / np;
    if (n_permutations > 1) {
      const double variance =
          std::max(0.0, (sum_sq[i] - sum[i] * sum[i] / np) / (np - 1.0));
      out.stderrs[i] = std::sqrt(variance / np);
    } else {
      out.stderrs[i] = 0.0;
    }
  }
  const double span = model(window) - model(baseline);
  const double total = std::accumulate(out.values.begin(), out.values.end(), 0.0);
  out.efficiency_residual = std::abs(total - span);
  return out;
}

double AttributionReport::mean_abs_shap(int timestep, std::size_t feature) const {
  if (shap_values.empty()) return 0.0;
  double total = 0.0;
  for (const Tensor& shap : shap_values) {
    total += std::abs(shap.at(static_cast<std::size_t>(timestep), feature));
  }
  return total / static_cast<double>(shap_values.size());
}

std::vector<SummaryRow> summary_export(const AttributionReport& report, int top_k,
                                       bool split_by_timestep) {
  if (report.shap_values.empty()) {
    throw ConfigError("summary_export on an empty attribution report");
  }
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  const std::size_t f = report.feature_names.size();

  struct Cell {
    int timestep;
    std::size_t feature;
    double importance;
  };
  std::vector<Cell> cells;
  for (int t = 0; t < report.timesteps; ++t) {
    for (std::size_t j = 0; j < f; ++j) {
      cells.push_back({t, j, report.mean_abs_shap(t, j)});
    }
  }
  auto by_importance = [](const Cell& a, const Cell& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    if (a.timestep != b.timestep) return a.timestep < b.timestep;
    return a.feature < b.feature;
  };

  std::vector<SummaryRow> rows;
  auto emit = [&](const std::vector<Cell>& ranked) {
    const std::size_t limit =
        std::min(ranked.size(), static_cast<std::size_t>(top_k));
    for (std::size_t r = 0; r < limit; ++r) {
      const Cell& cell = ranked[r];
      for (std::size_t w = 0; w < report.shap_values.size(); ++w) {
        SummaryRow row;
        row.timestep = cell.timestep;
        row.rank = static_cast<int>(r + 1);
        row.feature = report.feature_names[cell.feature];
        row.mean_abs_shap = cell.importance;
        row.window_id = report.window_ids[w];
        row.shap_value =
            report.shap_values[w].at(static_cast<std::size_t>(cell.timestep),
                                     cell.feature);
        row.feature_value =
            report.feature_values[w].at(static_cast<std::size_t>(cell.timestep),
                                        cell.feature);
        rows.push_back(std::move(row));
      }
    }
  };

  if (split_by_timestep) {
    for (int t = 0; t < report.timesteps; ++t) {
      std::vector<Cell> slice;
      for (const Cell& c : cells) {
        if (c.timestep == t) slice.push_back(c);
      }
      std::sort(slice.begin(), slice.end(), by_importance);
      emit(slice);
    }
  } else {
    std::sort(cells.begin(), cells.end(), by_importance);
    emit(cells);
  }
  return rows;
}

}  // namespace intformer
