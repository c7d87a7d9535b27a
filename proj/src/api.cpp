#include "riskweave/api.hpp"

#include <algorithm>
#include <numeric>

#include "riskweave/rng.hpp"

namespace riskweave::api {

using nlohmann::json;

Resources Resources::load(const std::string& map_path, const std::string& templates_path,
                          const std::string& lexicon_path) {
  Resources r;
  if (!map_path.empty()) r.map = verbal::load_map(map_path);
  if (!templates_path.empty()) r.templates = narrate::Templates::load(templates_path);
  if (!lexicon_path.empty()) r.lexicon = narrate::Lexicon::load(lexicon_path);
  return r;
}

const tabular::Schema& schema_of(const Model& model) {
  return std::visit([](const auto& m) -> const tabular::Schema& { return m.schema; }, model);
}

std::string kind_of(const Model& model) { return std::holds_alternative<cart::DecisionTree>(model) ? "tree" : "cycles"; }

json model_to_json(const Model& model) {
  if (const auto* tree = std::get_if<cart::DecisionTree>(&model)) return cart::tree_to_json(*tree);
  return cycles::model_to_json(std::get<cycles::CycleModel>(model));
}

Model model_from_json(const json& j) {
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "riskweave.tree") return cart::tree_from_json(j);
  if (format == "riskweave.cycle_model") return cycles::model_from_json(j);
  throw Error("InvalidModel", "unrecognized model format '" + format + "'");
}

double model_accuracy(const cart::DecisionTree& tree) { return tree.test_accuracy.value_or(0.0); }

// --- training -------------------------------------------------------------------

TrainResult train(const TrainRequest& request) {
  const tabular::Schema schema = request.schema ? *request.schema : tabular::infer_schema(request.csv);
  const auto data = tabular::parse_csv(request.csv, schema, "request");
  auto [train_set, test_set] = tabular::split(data, request.test_fraction, request.seed);
  TrainResult out{cart::train(train_set, request.params), {}};
  out.confusion = metrics::evaluate(out.tree, test_set);
  out.tree.test_accuracy = metrics::accuracy(out.confusion);
  return out;
}

json train_summary(const TrainResult& result) {
  return {{"kind", "tree"},
          {"accuracy", *result.tree.test_accuracy},
          {"confusion_matrix", metrics::to_json(result.confusion)},
          {"train_size", result.tree.train_size},
          {"leaves", result.tree.leaves().size()}};
}

CyclesTrainResult train_cycles(const CyclesTrainRequest& request) {
  if (!(request.test_fraction >= 0.0 && request.test_fraction < 1.0))
    throw Error("FractionOutOfRange", "test fraction must lie in [0, 1)", {{"test_fraction", request.test_fraction}});
  const tabular::Schema schema = request.schema ? *request.schema : tabular::ivf_schema();
  auto patients = cycles::parse_patients_csv(request.csv, schema);

  std::vector<std::size_t> order(patients.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(request.seed);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(patients.size()) * request.test_fraction));
  std::vector<cycles::PatientHistory> train_set, test_set;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_test ? test_set : train_set).push_back(patients[order[k]]);

  const auto records = cycles::expand_person_period(train_set);
  CyclesTrainResult out{cycles::fit(schema, records, request.options), std::nullopt, train_set.size()};
  if (!test_set.empty()) {
    try {
      out.c_index = cycles::concordance_index(out.model, test_set);
    } catch (const Error& e) {
      if (e.code() != "NoComparablePairs") throw;
    }
  }
  return out;
}

json train_summary(const CyclesTrainResult& result) {
  const auto& m = result.model;
  json j = {{"kind", "cycles"},
            {"c_index", result.c_index ? json(*result.c_index) : json(nullptr)},
            {"iterations", m.report.iterations},
            {"log_likelihood", m.report.log_likelihood},
            {"max_cycles", m.max_cycles()},
            {"train_size", result.train_patients}};
  return j;
}

std::optional<tabular::Schema> schema_field(const json& body) {
  if (!body.contains("schema") || body.at("schema").is_null()) return std::nullopt;
  const auto& s = body.at("schema");
  if (s.is_string()) return tabular::parse_schema_text(s.get<std::string>());
  return tabular::schema_from_json(s);
}

namespace {

const json& require(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key))
    throw Error("InvalidRequest", std::string("missing field '") + key + "'", {{"field", key}});
  return body.at(key);
}

template <typename T>
T field(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("InvalidRequest", std::string("field '") + key + "' has the wrong type", {{"field", key}});
  }
}

}  // namespace

TrainRequest train_request_from_json(const json& body) {
  TrainRequest r;
  const auto& csv = require(body, "csv");
  if (!csv.is_string()) throw Error("InvalidRequest", "field 'csv' must be a string", {{"field", "csv"}});
  r.csv = csv.get<std::string>();
  r.schema = schema_field(body);
  if (body.contains("params")) r.params = cart::params_from_json(body.at("params"));
  r.seed = field<std::uint64_t>(body, "seed", r.seed);
  r.test_fraction = field<double>(body, "test_fraction", r.test_fraction);
  return r;
}

CyclesTrainRequest cycles_request_from_json(const json& body) {
  CyclesTrainRequest r;
  const auto& csv = require(body, "csv");
  if (!csv.is_string()) throw Error("InvalidRequest", "field 'csv' must be a string", {{"field", "csv"}});
  r.csv = csv.get<std::string>();
  r.schema = schema_field(body);
  if (body.contains("options")) {
    const auto& o = body.at("options");
    r.options.max_cycles = field<std::size_t>(o, "max_cycles", r.options.max_cycles);
    r.options.lambda = field<double>(o, "lambda", r.options.lambda);
    r.options.tol = field<double>(o, "tol", r.options.tol);
    r.options.max_iter = field<std::size_t>(o, "max_iter", r.options.max_iter);
  }
  r.seed = field<std::uint64_t>(body, "seed", r.seed);
  r.test_fraction = field<double>(body, "test_fraction", r.test_fraction);
  return r;
}

// --- per-instance responses -------------------------------------------------------

json predict(const cart::DecisionTree& tree, const tabular::Instance& x, const Resources& r) {
  const auto p = cart::predict(tree, x);
  json path = json::array();
  for (const auto& step : p.path) path.push_back(cart::describe(tree.schema, step.satisfied()));
  return {{"label", tree.schema.class_name(p.label)},
          {"confidence_p", p.confidence_p},
          {"samples", p.samples},
          {"counts", p.counts},
          {"certainty_phrase", verbal::verbalize(r.map, model_accuracy(tree), p.confidence_p)},
          {"leaf", p.leaf},
          {"path", std::move(path)}};
}

json explain(const cart::DecisionTree& tree, const tabular::Instance& x, const Resources& r) {
  const auto p = cart::predict(tree, x);
  const auto e = narrate::narrate_prediction(tree.schema, p, model_accuracy(tree), r.map, r.templates);
  json j = narrate::to_json(tree.schema, e);
  j["leaf"] = p.leaf;
  return j;
}

json what_if(const cart::DecisionTree& tree, const tabular::Instance& x, std::string_view target_label) {
  const auto cf = narrate::what_if(tree, x, target_label, narrate::default_what_if_options(tree.schema));
  return narrate::to_json(tree.schema, cf);
}

json coverage(const tabular::Schema& schema, const std::vector<std::string>& asserted, const Resources& r) {
  return narrate::to_json(narrate::coverage_report(schema, asserted, r.lexicon, r.templates));
}

json cycles_predict(const cycles::CycleModel& model, const tabular::Instance& x, std::size_t n_cycles,
                    const Resources& r) {
  const auto curve = cycles::predict_curve(model, x, n_cycles);
  const double c = curve.cumulative.back();
  return {{"cycles", n_cycles},
          {"conditional", curve.conditional},
          {"cumulative", curve.cumulative},
          {"percentage", verbal::format_probability(c, verbal::Percentage{})},
          {"frequency", verbal::format_probability(c, verbal::NaturalFrequency{100})},
          {"text", cycles::narrate_curve(curve, n_cycles, r.templates)}};
}

json summary(const cart::DecisionTree& tree, const Resources& r) {
  return narrate::to_json(tree.schema, narrate::global_summary(tree, model_accuracy(tree), r.map, r.templates));
}

tabular::Instance features_field(const tabular::Schema& schema, const json& body) {
  if (!body.is_object()) throw Error("InvalidRequest", "request body must be a JSON object");
  if (body.contains("features")) return tabular::instance_from_json(schema, body.at("features"));
  json record = body;
  for (const char* key : {"target_label", "asserted", "n_cycles"}) record.erase(key);
  return tabular::instance_from_json(schema, record);
}

json error_body(const Error& e) {
  json j = json::object();
  if (e.context().is_object())
    for (auto it = e.context().begin(); it != e.context().end(); ++it) j[it.key()] = it.value();
  j["error"] = e.code();
  j["detail"] = e.detail();
  j["context"] = e.context();
  return j;
}

}  // namespace riskweave::api
