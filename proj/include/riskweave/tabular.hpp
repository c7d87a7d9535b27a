#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskweave::tabular {

enum class FeatureKind { categorical, numeric };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::string> levels;  // categorical only, declared order
  std::string unit;                 // numeric only, may be empty
  bool allow_missing = false;       // reserved; missing values are always rejected

  bool is_categorical() const noexcept { return kind == FeatureKind::categorical; }
  std::optional<std::size_t> level_index(std::string_view level) const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct TargetSpec {
  std::string name;
  std::array<std::string, 2> classes;
  std::size_t positive = 1;  // index into classes; the "high risk" class
  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

/// Ordered features plus a binary target. Validated on construction.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<FeatureSpec> features, TargetSpec target);

  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
  std::size_t size() const noexcept { return features_.size(); }
  const TargetSpec& target() const noexcept { return target_; }

  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> class_index(std::string_view label) const;
  const std::string& class_name(std::size_t index) const { return target_.classes.at(index); }
  std::size_t positive_class() const noexcept { return target_.positive; }

  /// Render an encoded value (level index or number) for display and CSV output.
  std::string format_value(std::size_t feature, double value) const;
  /// Parse a cell per the feature's kind; throws ValueOutOfDomain with column context.
  double parse_value(std::size_t feature, std::string_view text) const;

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<FeatureSpec> features_;
  TargetSpec target_;
};

/// One value per feature in schema order. Categorical features hold the level
/// index; numeric features hold the number.
using Instance = std::vector<double>;

struct Row {
  Instance values;
  std::size_t label = 0;  // index into Schema::target().classes

  friend bool operator==(const Row&, const Row&) = default;
};

struct Dataset {
  Schema schema;
  std::vector<Row> rows;
  std::string provenance;

  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
};

// Low-level CSV table: header plus string cells, comma separated, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(std::string_view text);

Dataset parse_csv(std::string_view text, const Schema& schema, std::string provenance = "csv");
std::string to_csv(const Dataset& dataset);
Schema infer_schema(std::string_view text, std::optional<std::string> positive_label = std::nullopt);

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

// Instances as JSON records ({"feature name": value, ...}).
Instance instance_from_json(const Schema& schema, const nlohmann::json& record);
nlohmann::json instance_to_json(const Schema& schema, const Instance& instance);
/// Throws SchemaMismatch unless the instance has the right arity and in-domain values.
void check_instance(const Schema& schema, const Instance& instance);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);

/// Sectioned key-value schema file, e.g.
///
///   [target]
///   name = CHD
///   classes = low risk, high risk
///   positive = high risk
///
///   [feature]
///   name = Age
///   kind = categorical
///   levels = 25-45, 45-55, 55-65, 65-75, 75-90
///
///   [feature]
///   name = BMI
///   kind = numeric
///   unit = kg/m2
Schema parse_schema_text(std::string_view text);
std::string schema_to_text(const Schema& schema);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);
/// Ten significant digits, for sentences and labels.
std::string format_display(double value);
/// Decimal with '.' separator only; std::nullopt when the text is not a finite number.
std::optional<double> parse_number(std::string_view text);

// ---------------------------------------------------------------------------
// Synthetic data standing in for the non-public cohorts.

struct PlantedRule {
  std::vector<std::string> conditions;  // conjunction, human-readable
  std::string label;
};

struct SyntheticChd {
  Dataset data;
  std::vector<PlantedRule> rules;             // rows matching any rule are high risk
  std::vector<std::string> planted_features;  // features the rules read
  double noise = 0.0;
};

/// 13-feature CHD-like cohort. Labels follow the planted rules, then each label
/// is flipped with probability `noise`. BMI is present but never read by the rules.
SyntheticChd synthesize_chd_like(std::uint64_t seed, std::size_t n, double noise = 0.05);
Schema chd_schema();
/// Applies the planted rules to one row of a chd_schema() dataset.
std::size_t chd_planted_label(const Schema& schema, const Instance& values);

/// Schema for the IVF cycle model: eight patient features and a live-birth target.
Schema ivf_schema();

}  // namespace riskweave::tabular
