#pragma once

// JSON request/response layer shared by the service, the CLI and the Python
// module, so that all three front ends emit identical documents.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/cart.hpp"
#include "riskweave/cycles.hpp"
#include "riskweave/error.hpp"
#include "riskweave/metrics.hpp"
#include "riskweave/narrate.hpp"
#include "riskweave/verbal.hpp"

namespace riskweave::api {

/// Verbal map, sentence templates and attribute lexicon used for narration.
struct Resources {
  verbal::VerbalMap map = verbal::default_map();
  narrate::Templates templates = narrate::Templates::defaults();
  narrate::Lexicon lexicon;

  /// Empty paths keep the built-in defaults.
  static Resources load(const std::string& map_path, const std::string& templates_path,
                        const std::string& lexicon_path);
};

using Model = std::variant<cart::DecisionTree, cycles::CycleModel>;

const tabular::Schema& schema_of(const Model& model);
std::string kind_of(const Model& model);
nlohmann::json model_to_json(const Model& model);
/// Dispatches on the "format" field.
Model model_from_json(const nlohmann::json& j);

/// Accuracy used to pick the verbal-map row: the stored held-out accuracy, or
/// 0 when the tree carries none (the most cautious row).
double model_accuracy(const cart::DecisionTree& tree);

// --- training -------------------------------------------------------------------

struct TrainRequest {
  std::string csv;
  std::optional<tabular::Schema> schema;  // inferred from the CSV when absent
  cart::TrainParams params;
  std::uint64_t seed = 7;
  double test_fraction = 0.2;
};

struct TrainResult {
  cart::DecisionTree tree;  // test_accuracy filled in
  metrics::ConfusionMatrix confusion;
};

/// Split, train on the training part, evaluate on the held-out part.
TrainResult train(const TrainRequest& request);
nlohmann::json train_summary(const TrainResult& result);

struct CyclesTrainRequest {
  std::string csv;
  std::optional<tabular::Schema> schema;  // defaults to the IVF schema
  cycles::FitOptions options;
  std::uint64_t seed = 7;
  double test_fraction = 0.2;
};

struct CyclesTrainResult {
  cycles::CycleModel model;
  std::optional<double> c_index;  // on the held-out patients, when it is defined
  std::size_t train_patients = 0;
};

CyclesTrainResult train_cycles(const CyclesTrainRequest& request);
nlohmann::json train_summary(const CyclesTrainResult& result);

/// Reads "schema" as a JSON schema object or schema text; nullopt when absent.
std::optional<tabular::Schema> schema_field(const nlohmann::json& body);
TrainRequest train_request_from_json(const nlohmann::json& body);
CyclesTrainRequest cycles_request_from_json(const nlohmann::json& body);

// --- per-instance responses -------------------------------------------------------

/// {label, confidence_p, samples, counts, certainty_phrase, leaf, path}
nlohmann::json predict(const cart::DecisionTree& tree, const tabular::Instance& x, const Resources& r);
/// narrate::to_json(Explanation) plus the predict fields it shares.
nlohmann::json explain(const cart::DecisionTree& tree, const tabular::Instance& x, const Resources& r);
nlohmann::json what_if(const cart::DecisionTree& tree, const tabular::Instance& x, std::string_view target_label);
nlohmann::json coverage(const tabular::Schema& schema, const std::vector<std::string>& asserted,
                        const Resources& r);
/// {cycles, conditional, cumulative, text, percentage, frequency}
nlohmann::json cycles_predict(const cycles::CycleModel& model, const tabular::Instance& x, std::size_t n_cycles,
                              const Resources& r);
nlohmann::json summary(const cart::DecisionTree& tree, const Resources& r);

/// Accepts {"features": {...}} or the bare feature record.
tabular::Instance features_field(const tabular::Schema& schema, const nlohmann::json& body);

/// {error, detail, context}, with context fields also copied to the top level.
nlohmann::json error_body(const Error& e);

}  // namespace riskweave::api
