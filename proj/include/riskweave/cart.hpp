#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/tabular.hpp"

namespace riskweave::cart {

using tabular::Dataset;
using tabular::Instance;
using tabular::Row;
using tabular::Schema;

using ClassCounts = std::array<std::size_t, 2>;

enum class Test { equals, not_equals, less_than, greater_or_equal };

/// A single feature test. `value` is the level index for equals/not_equals and
/// the threshold for less_than/greater_or_equal.
struct Predicate {
  std::size_t feature = 0;
  Test test = Test::equals;
  double value = 0.0;

  bool holds(const Instance& instance) const;
  Predicate negated() const;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// "Age = 65-75", "Daily alcohol consumption < 68.5 ml/day", ...
std::string describe(const Schema& schema, const Predicate& p);

// --- impurity and confidence ----------------------------------------------

/// 1 - sum_i (c_i / n)^2. Throws EmptyCounts when the total is zero.
double gini(std::span<const std::size_t> counts);

/// Upper tail of the chi-square distribution, Q(df/2, stat/2).
double chi_square_sf(double stat, int df);

/// Regularized upper incomplete gamma Q(a, x): series below x = a + 1,
/// Lentz continued fraction above.
double regularized_gamma_q(double a, double x);

enum class ConfidenceNull { uniform, training_prior };

struct ConfidenceOptions {
  ConfidenceNull null = ConfidenceNull::uniform;
  bool yates = false;
  std::array<double, 2> prior = {0.5, 0.5};  // used by the training_prior null
};

/// Chi-square goodness-of-fit p-value of the node's class counts against the
/// null distribution, df = k - 1. Near 0 = confident, 1 = no confidence.
double leaf_confidence(std::span<const std::size_t> counts, const ConfidenceOptions& options = {});

// --- training ---------------------------------------------------------------

struct TrainParams {
  std::size_t max_depth = 4;
  std::size_t min_samples_leaf = 5;
  double min_impurity_decrease = 0.002;
  ConfidenceNull confidence_null = ConfidenceNull::uniform;
  bool yates = false;

  void validate() const;
};

struct Split {
  Predicate predicate;  // equals(level) or less_than(threshold); rows where it holds go to if_true
  double impurity_decrease = 0.0;
};

/// Exhaustive search over equals(level) per categorical level and
/// less_than(midpoint) per gap between consecutive distinct numeric values.
/// Ties go to the lowest feature index, then the smallest threshold or the
/// lexicographically smallest level.
std::optional<Split> best_split(std::span<const Row> rows, const Schema& schema, const TrainParams& params);

struct Node {
  std::optional<Predicate> predicate;  // empty for leaves
  std::size_t if_true = 0;
  std::size_t if_false = 0;
  ClassCounts counts{};
  std::size_t samples = 0;
  std::size_t label = 0;  // argmax of counts, ties to the positive class
  double confidence_p = 1.0;
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return !predicate.has_value(); }
};

/// Immutable after training. Nodes are stored in depth-first preorder
/// (true branch first); index 0 is the root.
struct DecisionTree {
  std::vector<Node> nodes;
  Schema schema;
  std::size_t train_size = 0;
  std::array<double, 2> class_prior{};
  TrainParams params;
  std::vector<double> numeric_gaps;  // smallest gap between distinct training values, 0 if none
  std::optional<double> test_accuracy;

  const Node& root() const { return nodes.at(0); }
  std::vector<std::size_t> leaves() const;
  /// Features used by some internal node, in schema order.
  std::vector<std::size_t> used_features() const;
};

DecisionTree train(const Dataset& dataset, const TrainParams& params = {});

// --- prediction -------------------------------------------------------------

struct PathStep {
  Predicate predicate;  // the node's test
  bool taken = false;   // true if the instance satisfied it

  /// The condition the instance actually met at this step.
  Predicate satisfied() const { return taken ? predicate : predicate.negated(); }
};

struct Prediction {
  std::size_t label = 0;
  ClassCounts counts{};
  std::size_t samples = 0;
  double confidence_p = 1.0;
  std::vector<PathStep> path;
  std::size_t leaf = 0;

  /// max(counts) / samples; the probability-like score used for calibration.
  double majority_fraction() const;
};

Prediction predict(const DecisionTree& tree, const Instance& instance);

/// Root-to-node path for any node, in the same form predict() records.
std::vector<PathStep> path_to(const DecisionTree& tree, std::size_t node);

// --- serialization ----------------------------------------------------------

inline constexpr int kTreeFormatVersion = 1;

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);
nlohmann::json predicate_to_json(const Schema& schema, const Predicate& p);
Predicate predicate_from_json(const Schema& schema, const nlohmann::json& j);
nlohmann::json params_to_json(const TrainParams& params);
TrainParams params_from_json(const nlohmann::json& j);

}  // namespace riskweave::cart
