#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/cart.hpp"
#include "riskweave/verbal.hpp"

namespace riskweave::narrate {

using tabular::Instance;
using tabular::Schema;

/// All path predicates on one feature, merged. Categorical features carry a
/// required level or a set of excluded levels; numeric features carry a
/// half-open interval [lower, upper).
struct Condition {
  std::size_t feature = 0;
  std::optional<std::size_t> level;
  std::vector<std::size_t> excluded;
  std::optional<double> lower;
  std::optional<double> upper;

  bool satisfied_by(const Instance& instance) const;
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// "Age not in {65-75, 75-90}", "5 ≤ x < 10", "Cholesterol HDL ratio = Normal".
std::string describe(const Schema& schema, const Condition& condition);

/// Groups the satisfied predicates by feature, ordered by first occurrence.
std::vector<Condition> merge_path(std::span<const cart::PathStep> path);
std::vector<Condition> decision_path_conditions(const cart::Prediction& prediction);

// --- templates --------------------------------------------------------------

/// Named sentence templates with {slot} placeholders, loaded from JSON.
/// Every template name has a fixed slot vocabulary; the loader rejects
/// unknown names and unknown slots.
class Templates {
 public:
  static Templates defaults();
  static Templates from_json(const nlohmann::json& j);
  static Templates load(const std::filesystem::path& path);

  /// Throws MissingTemplate if `name` is absent.
  std::string render(std::string_view name, const std::map<std::string, std::string>& slots) const;
  bool has(std::string_view name) const { return templates_.count(std::string(name)) > 0; }
  nlohmann::json to_json() const;

  /// Template name -> allowed slots.
  static const std::map<std::string, std::vector<std::string>>& vocabulary();

 private:
  std::map<std::string, std::string> templates_;
};

inline constexpr int kTemplatesVersion = 1;

/// "a", "a and b", "a, b and c"
std::string join_list(const std::vector<std::string>& items);

// --- local explanation ------------------------------------------------------

struct Explanation {
  std::vector<Condition> conditions;
  std::vector<std::string> condition_text;  // describe() of each condition
  std::size_t label = 0;
  std::string certainty_phrase;
  std::string text;
  std::size_t samples = 0;
  double confidence_p = 1.0;
};

/// Outcome sentence with the certainty phrase, a reasons sentence (omitted for
/// an empty path), and a support sentence with the leaf sample count.
Explanation narrate_prediction(const Schema& schema, const cart::Prediction& prediction, double accuracy,
                               const verbal::VerbalMap& map, const Templates& templates);

nlohmann::json to_json(const Schema& schema, const Explanation& e);

// --- global explanation -----------------------------------------------------

struct Rule {
  std::vector<Condition> conditions;
  std::size_t label = 0;
  std::size_t samples = 0;
  double confidence_p = 1.0;
  std::size_t leaf = 0;
};

struct GlobalSummary {
  std::vector<Rule> rules;  // one per leaf, most samples first
  std::string text;
};

GlobalSummary global_summary(const cart::DecisionTree& tree, double accuracy, const verbal::VerbalMap& map,
                             const Templates& templates);

nlohmann::json to_json(const Schema& schema, const GlobalSummary& s);

// --- counterfactuals ----------------------------------------------------------

struct WhatIfOptions {
  std::vector<std::size_t> immutable_features;
};

/// Marks features whose name contains the word "age" as immutable.
WhatIfOptions default_what_if_options(const Schema& schema);

struct FeatureChange {
  std::size_t feature = 0;
  double from = 0.0;
  double to = 0.0;
};

struct Counterfactual {
  std::vector<FeatureChange> changes;  // schema order
  std::size_t new_label = 0;
  double new_confidence_p = 1.0;
  std::size_t new_samples = 0;
  std::size_t leaf = 0;
};

/// Among leaves labelled `target_label`, the one reachable by changing the
/// fewest features; ties go to more samples, then smaller confidence_p.
std::optional<Counterfactual> what_if(const cart::DecisionTree& tree, const Instance& instance,
                                      std::size_t target_label, const WhatIfOptions& options = {});
std::optional<Counterfactual> what_if(const cart::DecisionTree& tree, const Instance& instance,
                                      std::string_view target_label, const WhatIfOptions& options = {});

Instance apply(const Instance& instance, const Counterfactual& cf);

nlohmann::json to_json(const Schema& schema, const std::optional<Counterfactual>& cf);

// --- unknown knowns -----------------------------------------------------------

/// Alias table: normalized alias -> schema feature name.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::map<std::string, std::string>& aliases);
  static Lexicon from_json(const nlohmann::json& j);
  static Lexicon load(const std::filesystem::path& path);

  std::optional<std::string> resolve(std::string_view attribute) const;

 private:
  std::map<std::string, std::string> aliases_;
};

/// Lowercase, non-alphanumerics collapsed to single spaces, trimmed.
std::string normalize_attribute(std::string_view text);

struct CoverageReport {
  std::vector<std::string> modeled;    // schema feature names
  std::vector<std::string> unmodeled;  // as asserted
  std::string caveat_text;
};

CoverageReport coverage_report(const Schema& schema, const std::vector<std::string>& asserted,
                               const Lexicon& lexicon = {}, const Templates& templates = Templates::defaults());

nlohmann::json to_json(const CoverageReport& r);

}  // namespace riskweave::narrate
