#pragma once

#include <cstdint>
#include <vector>

namespace intformer {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  std::int64_t positives() const { return tp + fn; }
  std::int64_t negatives() const { return fp + tn; }
};

// Predicted crash iff p >= threshold.
ConfusionMatrix confusion(const std::vector<double>& predictions,
                          const std::vector<int>& labels, double threshold = 0.5);

// TP / (TP + FN). Throws UndefinedMetricError on a zero denominator.
double sensitivity(const ConfusionMatrix& cm);

// FP / (FP + TN). Throws UndefinedMetricError on a zero denominator.
double false_alarm_rate(const ConfusionMatrix& cm);

}  // namespace intformer
