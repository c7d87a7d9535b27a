#include "riskweave/metrics.hpp"

#include <cmath>

#include "riskweave/error.hpp"

namespace riskweave::metrics {

namespace {

double ratio(std::size_t num, std::size_t den, const char* metric) {
  if (den == 0) throw Error("UndefinedMetric", std::string(metric) + " has a zero denominator", {{"metric", metric}});
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix evaluate(const cart::DecisionTree& tree, const tabular::Dataset& test) {
  if (!(test.schema == tree.schema)) throw Error("SchemaMismatch", "test data schema differs from the model schema");
  if (test.empty()) throw Error("EmptyDataset", "no rows to evaluate");
  const std::size_t positive = tree.schema.positive_class();
  ConfusionMatrix m;
  for (const auto& row : test.rows) {
    const bool predicted = cart::predict(tree, row.values).label == positive;
    const bool actual = row.label == positive;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) { return ratio(m.tp + m.tn, m.total(), "accuracy"); }
double recall(const ConfusionMatrix& m) { return ratio(m.tp, m.tp + m.fn, "recall"); }
double false_negative_rate(const ConfusionMatrix& m) { return ratio(m.fn, m.tp + m.fn, "false_negative_rate"); }
double false_omission_rate(const ConfusionMatrix& m) { return ratio(m.fn, m.fn + m.tn, "false_omission_rate"); }

nlohmann::json to_json(const ConfusionMatrix& m) {
  nlohmann::json j = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
  // Undefined metrics are reported as null, never as 0.
  const auto put = [&](const char* key, double (*fn)(const ConfusionMatrix&)) {
    try {
      j[key] = fn(m);
    } catch (const Error&) {
      j[key] = nullptr;
    }
  };
  put("accuracy", accuracy);
  put("recall", recall);
  put("false_negative_rate", false_negative_rate);
  put("false_omission_rate", false_omission_rate);
  return j;
}

std::vector<ScoredPrediction> score(const cart::DecisionTree& tree, const tabular::Dataset& data) {
  if (!(data.schema == tree.schema)) throw Error("SchemaMismatch", "data schema differs from the model schema");
  std::vector<ScoredPrediction> out;
  out.reserve(data.size());
  for (const auto& row : data.rows) {
    const auto p = cart::predict(tree, row.values);
    out.push_back({p.majority_fraction(), p.label == row.label});
  }
  return out;
}

ReliabilityDiagram reliability(std::span<const ScoredPrediction> scored, std::size_t n_bins) {
  if (n_bins < 2) throw Error("InvalidArgument", "reliability needs at least two bins", {{"n_bins", n_bins}});
  if (scored.empty()) throw Error("EmptyInput", "no scored predictions");

  constexpr double lo = 0.5, hi = 1.0;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  ReliabilityDiagram d;
  d.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<std::size_t> correct(n_bins, 0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    d.bins[b].lo = lo + width * static_cast<double>(b);
    d.bins[b].hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (const auto& s : scored) {
    if (!(s.confidence >= lo && s.confidence <= hi))
      throw Error("InvalidArgument", "confidence score outside [0.5, 1]", {{"confidence", s.confidence}});
    auto b = static_cast<std::size_t>(std::floor((s.confidence - lo) / width));
    if (b >= n_bins) b = n_bins - 1;
    // Guard the float division against landing one bin off an edge.
    while (b > 0 && s.confidence < d.bins[b].lo) --b;
    while (b + 1 < n_bins && s.confidence >= d.bins[b + 1].lo) ++b;
    ++d.bins[b].count;
    conf_sum[b] += s.confidence;
    if (s.correct) ++correct[b];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (d.bins[b].count == 0) continue;
    const double n = static_cast<double>(d.bins[b].count);
    d.bins[b].mean_confidence = conf_sum[b] / n;
    d.bins[b].observed_accuracy = static_cast<double>(correct[b]) / n;
  }
  return d;
}

std::string to_csv(const ReliabilityDiagram& diagram) {
  std::string out = "bin_lo,bin_hi,mean_confidence,observed_accuracy,count\n";
  for (const auto& b : diagram.bins) {
    out += tabular::format_number(b.lo) + "," + tabular::format_number(b.hi) + "," +
           tabular::format_number(b.mean_confidence) + "," + tabular::format_number(b.observed_accuracy) + "," +
           std::to_string(b.count) + "\n";
  }
  return out;
}

}  // namespace riskweave::metrics
