#include "riskweave/narrate.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "riskweave/error.hpp"

namespace riskweave::narrate {

using cart::Predicate;
using cart::Test;

// --- conditions ---------------------------------------------------------------

bool Condition::satisfied_by(const Instance& instance) const {
  const double v = instance.at(feature);
  if (level && v != static_cast<double>(*level)) return false;
  for (auto e : excluded)
    if (v == static_cast<double>(e)) return false;
  if (lower && !(v >= *lower)) return false;
  if (upper && !(v < *upper)) return false;
  return true;
}

std::string describe(const Schema& schema, const Condition& c) {
  const auto& f = schema.feature(c.feature);
  if (f.is_categorical()) {
    if (c.level && !c.excluded.empty())
      return f.name + " = " + f.levels.at(*c.level) + " and " + f.name + " ≠ " + f.levels.at(*c.level);
    if (c.level) return f.name + " = " + f.levels.at(*c.level);
    if (c.excluded.size() == 1) return f.name + " ≠ " + f.levels.at(c.excluded.front());
    std::string out = f.name + " not in {";
    for (std::size_t i = 0; i < c.excluded.size(); ++i) {
      if (i) out += ", ";
      out += f.levels.at(c.excluded[i]);
    }
    return out + "}";
  }
  const std::string unit = f.unit.empty() ? "" : " " + f.unit;
  if (c.lower && c.upper)
    return tabular::format_display(*c.lower) + " ≤ " + f.name + " < " + tabular::format_display(*c.upper) + unit;
  if (c.upper) return f.name + " < " + tabular::format_display(*c.upper) + unit;
  if (c.lower) return f.name + " ≥ " + tabular::format_display(*c.lower) + unit;
  return f.name;
}

std::vector<Condition> merge_path(std::span<const cart::PathStep> path) {
  std::vector<Condition> out;
  for (const auto& step : path) {
    const Predicate p = step.satisfied();
    auto it = std::find_if(out.begin(), out.end(), [&](const Condition& c) { return c.feature == p.feature; });
    if (it == out.end()) {
      out.push_back(Condition{p.feature, {}, {}, {}, {}});
      it = std::prev(out.end());
    }
    switch (p.test) {
      case Test::equals: {
        const auto level = static_cast<std::size_t>(p.value);
        if (it->level && *it->level != level) it->excluded.push_back(*it->level);  // two required levels: unsatisfiable
        else it->level = level;
        break;
      }
      case Test::not_equals: {
        const auto level = static_cast<std::size_t>(p.value);
        if (std::find(it->excluded.begin(), it->excluded.end(), level) == it->excluded.end())
          it->excluded.push_back(level);
        break;
      }
      case Test::less_than:
        it->upper = it->upper ? std::min(*it->upper, p.value) : p.value;
        break;
      case Test::greater_or_equal:
        it->lower = it->lower ? std::max(*it->lower, p.value) : p.value;
        break;
    }
  }
  // A required level implies every other exclusion; excluding the required
  // level itself is a contradiction and is kept.
  for (auto& c : out)
    if (c.level) std::erase_if(c.excluded, [&](std::size_t e) { return e != *c.level; });
  return out;
}

std::vector<Condition> decision_path_conditions(const cart::Prediction& prediction) {
  return merge_path(prediction.path);
}

// --- templates ----------------------------------------------------------------

const std::map<std::string, std::vector<std::string>>& Templates::vocabulary() {
  static const std::map<std::string, std::vector<std::string>> vocab = {
      {"outcome", {"label", "certainty"}},
      {"reasons", {"conditions"}},
      {"support", {"samples"}},
      {"scope", {"features"}},
      {"rule", {"index", "conditions", "label", "certainty", "samples"}},
      {"rule_unconditional", {"index", "label", "certainty", "samples"}},
      {"caveat_unmodeled", {"attribute"}},
      {"caveat_generic", {"features"}},
      {"curve_single", {"percentage", "frequency"}},
      {"curve_cumulative", {"cycles", "percentage", "frequency"}},
  };
  return vocab;
}

namespace {

// Slot names referenced by a template; throws InvalidTemplate on unbalanced braces.
std::vector<std::string> slots_of(const std::string& name, const std::string& text) {
  std::vector<std::string> slots;
  std::size_t pos = 0;
  while ((pos = text.find_first_of("{}", pos)) != std::string::npos) {
    if (text[pos] == '}') throw Error("InvalidTemplate", "unbalanced '}'", {{"template", name}});
    const auto close = text.find('}', pos);
    if (close == std::string::npos) throw Error("InvalidTemplate", "unterminated slot", {{"template", name}});
    slots.push_back(text.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return slots;
}

}  // namespace

Templates Templates::defaults() {
  nlohmann::json j = {
      {"format", "riskweave.templates"},
      {"version", kTemplatesVersion},
      {"templates",
       {
           {"outcome", "The model predicts {label}. This prediction is {certainty}."},
           {"reasons", "The factors that led to this prediction are: {conditions}."},
           {"support", "This is based on {samples} people in the study who are similar to you."},
           {"scope", "The model only takes into account: {features}."},
           {"rule", "{index}. If {conditions}, the model predicts {label} ({certainty}, based on {samples} people)."},
           {"rule_unconditional",
            "{index}. For everyone, the model predicts {label} ({certainty}, based on {samples} people)."},
           {"caveat_unmodeled",
            "The model does not take {attribute} into account, so its prediction cannot reflect it."},
           {"caveat_generic", "The model only takes into account: {features}."},
           {"curve_single", "In your first cycle, the chance of success is {percentage}: about {frequency}."},
           {"curve_cumulative",
            "Over your first {cycles} cycles combined, the chance of success is {percentage}: about {frequency}."},
       }},
  };
  return from_json(j);
}

Templates Templates::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "riskweave.templates")
    throw Error("InvalidTemplate", "not a riskweave.templates document");
  if (!j.contains("version") || j.at("version") != kTemplatesVersion)
    throw Error("UnsupportedVersion", "templates version " + j.value("version", nlohmann::json()).dump());
  const auto& jt = j.value("templates", nlohmann::json::object());
  if (!jt.is_object()) throw Error("InvalidTemplate", "'templates' must be an object");

  Templates t;
  const auto& vocab = vocabulary();
  for (auto it = jt.begin(); it != jt.end(); ++it) {
    auto known = vocab.find(it.key());
    if (known == vocab.end()) throw Error("UnknownTemplate", "unknown template '" + it.key() + "'");
    if (!it.value().is_string()) throw Error("InvalidTemplate", "template must be a string", {{"template", it.key()}});
    const auto text = it.value().get<std::string>();
    for (const auto& slot : slots_of(it.key(), text)) {
      if (std::find(known->second.begin(), known->second.end(), slot) == known->second.end())
        throw Error("UnknownSlot", "template '" + it.key() + "' uses unknown slot '" + slot + "'",
                    {{"template", it.key()}, {"slot", slot}});
    }
    t.templates_.emplace(it.key(), text);
  }
  return t;
}

Templates Templates::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open templates", {{"path", path.string()}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("InvalidTemplate", std::string("templates file is not JSON: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json Templates::to_json() const {
  return {{"format", "riskweave.templates"}, {"version", kTemplatesVersion}, {"templates", templates_}};
}

std::string Templates::render(std::string_view name, const std::map<std::string, std::string>& slots) const {
  const auto it = templates_.find(std::string(name));
  if (it == templates_.end()) throw Error("MissingTemplate", "no template named '" + std::string(name) + "'");
  const std::string& text = it->second;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = text.find('}', open);
    out.append(text, pos, open - pos);
    const std::string slot = text.substr(open + 1, close - open - 1);
    const auto value = slots.find(slot);
    if (value == slots.end())
      throw Error("MissingSlot", "no value for slot '" + slot + "'", {{"template", std::string(name)}});
    out += value->second;
    pos = close + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

// --- local explanation ----------------------------------------------------------

Explanation narrate_prediction(const Schema& schema, const cart::Prediction& prediction, double accuracy,
                               const verbal::VerbalMap& map, const Templates& templates) {
  Explanation e;
  e.conditions = decision_path_conditions(prediction);
  for (const auto& c : e.conditions) e.condition_text.push_back(describe(schema, c));
  e.label = prediction.label;
  e.certainty_phrase = verbal::verbalize(map, accuracy, prediction.confidence_p);
  e.samples = prediction.samples;
  e.confidence_p = prediction.confidence_p;

  e.text = templates.render("outcome", {{"label", schema.class_name(e.label)}, {"certainty", e.certainty_phrase}});
  if (!e.conditions.empty()) e.text += " " + templates.render("reasons", {{"conditions", join_list(e.condition_text)}});
  e.text += " " + templates.render("support", {{"samples", std::to_string(e.samples)}});
  return e;
}

nlohmann::json to_json(const Schema& schema, const Explanation& e) {
  return {{"label", schema.class_name(e.label)},
          {"certainty_phrase", e.certainty_phrase},
          {"conditions", e.condition_text},
          {"samples", e.samples},
          {"confidence_p", e.confidence_p},
          {"text", e.text}};
}

// --- global explanation -----------------------------------------------------------

GlobalSummary global_summary(const cart::DecisionTree& tree, double accuracy, const verbal::VerbalMap& map,
                             const Templates& templates) {
  GlobalSummary s;
  // Preorder storage already lists leaves depth-first, true branch first.
  for (std::size_t leaf : tree.leaves()) {
    const auto path = cart::path_to(tree, leaf);
    const auto& node = tree.nodes[leaf];
    s.rules.push_back({merge_path(path), node.label, node.samples, node.confidence_p, leaf});
  }
  std::stable_sort(s.rules.begin(), s.rules.end(),
                   [](const Rule& a, const Rule& b) { return a.samples > b.samples; });

  std::vector<std::string> used;
  for (auto f : tree.used_features()) used.push_back(tree.schema.feature(f).name);
  s.text = templates.render("scope", {{"features", used.empty() ? std::string("no patient features") : join_list(used)}});
  for (std::size_t i = 0; i < s.rules.size(); ++i) {
    const Rule& r = s.rules[i];
    std::map<std::string, std::string> slots = {
        {"index", std::to_string(i + 1)},
        {"label", tree.schema.class_name(r.label)},
        {"certainty", verbal::verbalize(map, accuracy, r.confidence_p)},
        {"samples", std::to_string(r.samples)},
    };
    if (r.conditions.empty()) {
      s.text += "\n" + templates.render("rule_unconditional", slots);
    } else {
      std::vector<std::string> parts;
      for (const auto& c : r.conditions) parts.push_back(describe(tree.schema, c));
      slots["conditions"] = join_list(parts);
      s.text += "\n" + templates.render("rule", slots);
    }
  }
  return s;
}

nlohmann::json to_json(const Schema& schema, const GlobalSummary& s) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : s.rules) {
    std::vector<std::string> conditions;
    for (const auto& c : r.conditions) conditions.push_back(describe(schema, c));
    rules.push_back({{"conditions", conditions},
                     {"label", schema.class_name(r.label)},
                     {"samples", r.samples},
                     {"confidence_p", r.confidence_p}});
  }
  return {{"rules", std::move(rules)}, {"text", s.text}};
}

// --- counterfactuals ----------------------------------------------------------------

WhatIfOptions default_what_if_options(const Schema& schema) {
  WhatIfOptions o;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const std::string words = " " + normalize_attribute(schema.feature(f).name) + " ";
    if (words.find(" age ") != std::string::npos) o.immutable_features.push_back(f);
  }
  return o;
}

namespace {

// Value that moves `current` into the condition, or nullopt if impossible.
std::optional<double> satisfying_value(const Schema& schema, const Condition& c, double gap) {
  const auto& f = schema.feature(c.feature);
  if (f.is_categorical()) {
    if (c.level) return static_cast<double>(*c.level);
    for (std::size_t l = 0; l < f.levels.size(); ++l)
      if (std::find(c.excluded.begin(), c.excluded.end(), l) == c.excluded.end()) return static_cast<double>(l);
    return std::nullopt;
  }
  // No observed spacing to step by (constant training column); fall back to a unit step.
  if (!(gap > 0.0)) gap = 1.0;
  if (c.lower && c.upper) {
    if (!(*c.lower < *c.upper)) return std::nullopt;
    return *c.lower + (*c.upper - *c.lower) / 2.0;
  }
  if (c.upper) return *c.upper - gap;
  if (c.lower) return *c.lower + gap;
  return std::nullopt;
}

}  // namespace

std::optional<Counterfactual> what_if(const cart::DecisionTree& tree, const Instance& instance,
                                      std::size_t target_label, const WhatIfOptions& options) {
  if (target_label > 1) throw Error("UnknownLabel", "target label index out of range");
  tabular::check_instance(tree.schema, instance);

  std::optional<Counterfactual> best;
  for (std::size_t leaf : tree.leaves()) {
    const auto& node = tree.nodes[leaf];
    if (node.label != target_label) continue;
    const auto path = cart::path_to(tree, leaf);
    Counterfactual cf{{}, node.label, node.confidence_p, node.samples, leaf};
    bool feasible = true;
    for (const auto& c : merge_path(path)) {
      if (c.satisfied_by(instance)) continue;
      const bool immutable = std::find(options.immutable_features.begin(), options.immutable_features.end(),
                                       c.feature) != options.immutable_features.end();
      const auto to = immutable ? std::nullopt : satisfying_value(tree.schema, c, tree.numeric_gaps.at(c.feature));
      Instance probe = instance;
      if (to) probe[c.feature] = *to;
      if (!to || !c.satisfied_by(probe)) {
        feasible = false;
        break;
      }
      cf.changes.push_back({c.feature, instance[c.feature], *to});
    }
    if (!feasible) continue;
    std::sort(cf.changes.begin(), cf.changes.end(),
              [](const FeatureChange& a, const FeatureChange& b) { return a.feature < b.feature; });

    const auto better = [&](const Counterfactual& a, const Counterfactual& b) {
      if (a.changes.size() != b.changes.size()) return a.changes.size() < b.changes.size();
      if (a.new_samples != b.new_samples) return a.new_samples > b.new_samples;
      return a.new_confidence_p < b.new_confidence_p;
    };
    if (!best || better(cf, *best)) best = std::move(cf);
  }
  return best;
}

std::optional<Counterfactual> what_if(const cart::DecisionTree& tree, const Instance& instance,
                                      std::string_view target_label, const WhatIfOptions& options) {
  const auto idx = tree.schema.class_index(target_label);
  if (!idx)
    throw Error("UnknownLabel", "'" + std::string(target_label) + "' is not a class of this model",
                {{"label", std::string(target_label)}});
  return what_if(tree, instance, *idx, options);
}

Instance apply(const Instance& instance, const Counterfactual& cf) {
  Instance out = instance;
  for (const auto& ch : cf.changes) out.at(ch.feature) = ch.to;
  return out;
}

nlohmann::json to_json(const Schema& schema, const std::optional<Counterfactual>& cf) {
  if (!cf) return {{"found", false}, {"changes", nlohmann::json::array()}};
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& ch : cf->changes) {
    const auto& f = schema.feature(ch.feature);
    nlohmann::json jc = {{"feature", f.name}};
    if (f.is_categorical()) {
      jc["from"] = schema.format_value(ch.feature, ch.from);
      jc["to"] = schema.format_value(ch.feature, ch.to);
    } else {
      jc["from"] = ch.from;
      jc["to"] = ch.to;
    }
    changes.push_back(std::move(jc));
  }
  return {{"found", true},
          {"changes", std::move(changes)},
          {"new_label", schema.class_name(cf->new_label)},
          {"new_confidence_p", cf->new_confidence_p},
          {"new_samples", cf->new_samples}};
}

// --- unknown knowns -------------------------------------------------------------------

std::string normalize_attribute(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(ch));
    } else {
      pending_space = true;
    }
  }
  return out;
}

Lexicon::Lexicon(const std::map<std::string, std::string>& aliases) {
  for (const auto& [alias, feature] : aliases) aliases_[normalize_attribute(alias)] = feature;
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "riskweave.lexicon") throw Error("InvalidLexicon", "not a riskweave.lexicon document");
    if (j.at("version").get<int>() != 1) throw Error("UnsupportedVersion", "lexicon version " + j.at("version").dump());
    return Lexicon(j.at("aliases").get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error("InvalidLexicon", e.what());
  }
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open lexicon", {{"path", path.string()}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("InvalidLexicon", std::string("lexicon is not JSON: ") + e.what());
  }
  return from_json(j);
}

std::optional<std::string> Lexicon::resolve(std::string_view attribute) const {
  const auto it = aliases_.find(normalize_attribute(attribute));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

CoverageReport coverage_report(const Schema& schema, const std::vector<std::string>& asserted,
                               const Lexicon& lexicon, const Templates& templates) {
  CoverageReport r;
  std::set<std::string> seen_unmodeled;
  for (const auto& raw : asserted) {
    const std::string norm = normalize_attribute(raw);
    if (norm.empty()) continue;
    std::optional<std::string> match;
    for (const auto& f : schema.features())
      if (normalize_attribute(f.name) == norm) match = f.name;
    if (!match) {
      if (auto alias = lexicon.resolve(raw); alias && schema.feature_index(*alias)) match = *alias;
    }
    if (match) {
      if (std::find(r.modeled.begin(), r.modeled.end(), *match) == r.modeled.end()) r.modeled.push_back(*match);
    } else if (seen_unmodeled.insert(norm).second) {
      std::string trimmed = raw;
      trimmed.erase(0, trimmed.find_first_not_of(" \t"));
      trimmed.erase(trimmed.find_last_not_of(" \t") + 1);
      r.unmodeled.push_back(trimmed);
    }
  }

  std::vector<std::string> names;
  for (const auto& f : schema.features()) names.push_back(f.name);
  r.caveat_text = templates.render("caveat_generic", {{"features", join_list(names)}});
  for (const auto& a : r.unmodeled) r.caveat_text += " " + templates.render("caveat_unmodeled", {{"attribute", a}});
  return r;
}

nlohmann::json to_json(const CoverageReport& r) {
  return {{"modeled", r.modeled}, {"unmodeled", r.unmodeled}, {"caveat_text", r.caveat_text}};
}

}  // namespace riskweave::narrate
