#include "intformer/eval.hpp"

#include "intformer/errors.hpp"

namespace intformer {

ConfusionMatrix confusion(const std::vector<double>& predictions,
                          const std::vector<int>& labels, double threshold) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("predictions and labels differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (actual) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

double sensitivity(const ConfusionMatrix& cm) {
  if (cm.positives() == 0) {
    throw UndefinedMetricError("sensitivity undefined: no actual positives");
  }
  return static_cast<double>(cm.tp) / static_cast<double>(cm.positives());
}

double false_alarm_rate(const ConfusionMatrix& cm) {
  if (cm.negatives() == 0) {
    throw UndefinedMetricError("false alarm rate undefined: no actual negatives");
  }
  return static_cast<double>(cm.fp) / static_cast<double>(cm.negatives());
}

}  // namespace intformer
