#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/cart.hpp"

namespace riskweave::metrics {

/// Positive = the schema's designated "high risk" class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix evaluate(const cart::DecisionTree& tree, const tabular::Dataset& test);

// Each throws UndefinedMetric when its denominator is zero.
double accuracy(const ConfusionMatrix& m);
double recall(const ConfusionMatrix& m);
double false_negative_rate(const ConfusionMatrix& m);
double false_omission_rate(const ConfusionMatrix& m);

nlohmann::json to_json(const ConfusionMatrix& m);

struct ScoredPrediction {
  double confidence = 0.0;  // leaf majority fraction, in [0.5, 1]
  bool correct = false;
};

/// One scored prediction per row of `data`.
std::vector<ScoredPrediction> score(const cart::DecisionTree& tree, const tabular::Dataset& data);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_confidence = 0.0;
  double observed_accuracy = 0.0;
  std::size_t count = 0;
};

struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;
};

/// Equal-width bins over [0.5, 1.0], right-open except the last.
/// Empty bins report mean_confidence = observed_accuracy = 0.
ReliabilityDiagram reliability(std::span<const ScoredPrediction> scored, std::size_t n_bins);

/// bin_lo,bin_hi,mean_confidence,observed_accuracy,count
std::string to_csv(const ReliabilityDiagram& diagram);

}  // namespace riskweave::metrics
