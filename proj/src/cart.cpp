#include "riskweave/cart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "riskweave/error.hpp"

namespace riskweave::cart {

namespace {

__extension__ using u128 = unsigned __int128;

// Split quality as the exact fraction S_L/n_L + S_R/n_R with S = sum of squared
// class counts. Maximizing it maximizes the weighted Gini decrease, and the
// integer form makes tie detection exact.
struct Score {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};

std::uint64_t sum_squares(const ClassCounts& c) {
  std::uint64_t s = 0;
  for (auto v : c) s += static_cast<std::uint64_t>(v) * v;
  return s;
}

std::size_t total(const ClassCounts& c) { return c[0] + c[1]; }

Score split_score(const ClassCounts& left, const ClassCounts& right) {
  const std::uint64_t nl = total(left), nr = total(right);
  return {sum_squares(left) * nr + sum_squares(right) * nl, nl * nr};
}

bool better(const Score& a, const Score& b) {
  return static_cast<u128>(a.num) * b.den > static_cast<u128>(b.num) * a.den;
}

// True when the split strictly lowers impurity below the parent's.
bool improves(const Score& s, const ClassCounts& parent) {
  const std::uint64_t n = total(parent);
  return static_cast<u128>(s.num) * n > static_cast<u128>(sum_squares(parent)) * s.den;
}

double decrease_of(const Score& s, const ClassCounts& parent) {
  const double n = static_cast<double>(total(parent));
  const double child = 1.0 - static_cast<double>(s.num) / (static_cast<double>(s.den) * n);
  return gini(parent) - child;
}

ClassCounts count_labels(const std::vector<const Row*>& rows) {
  ClassCounts c{};
  for (const Row* r : rows) ++c.at(r->label);
  return c;
}

std::size_t majority_label(const ClassCounts& c, std::size_t positive) {
  if (c[0] == c[1]) return positive;
  return c[0] > c[1] ? 0 : 1;
}

std::optional<Split> find_split(const std::vector<const Row*>& rows, const Schema& schema,
                                const TrainParams& params) {
  if (rows.size() < 2) return std::nullopt;
  const ClassCounts parent = count_labels(rows);
  if (parent[0] == 0 || parent[1] == 0) return std::nullopt;

  std::optional<Predicate> best_pred;
  Score best_score;
  const auto consider = [&](const ClassCounts& left, const ClassCounts& right, const Predicate& pred) {
    if (total(left) < params.min_samples_leaf || total(right) < params.min_samples_leaf) return;
    const Score s = split_score(left, right);
    if (!improves(s, parent)) return;
    if (!best_pred || better(s, best_score)) {
      best_pred = pred;
      best_score = s;
    }
  };

  std::vector<const Row*> sorted;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema.feature(f);
    if (spec.is_categorical()) {
      std::vector<ClassCounts> per_level(spec.levels.size(), ClassCounts{});
      for (const Row* r : rows) ++per_level.at(static_cast<std::size_t>(r->values[f]))[r->label];
      std::vector<std::size_t> order(spec.levels.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return spec.levels[a] < spec.levels[b]; });
      for (std::size_t level : order) {
        const ClassCounts& in = per_level[level];
        const ClassCounts out{parent[0] - in[0], parent[1] - in[1]};
        consider(in, out, Predicate{f, Test::equals, static_cast<double>(level)});
      }
    } else {
      sorted = rows;
      std::sort(sorted.begin(), sorted.end(),
                [f](const Row* a, const Row* b) { return a->values[f] < b->values[f]; });
      ClassCounts left{};
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left[sorted[i]->label];
        const double lo = sorted[i]->values[f];
        const double hi = sorted[i + 1]->values[f];
        if (!(lo < hi)) continue;
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid > lo && mid <= hi)) mid = hi;
        const ClassCounts right{parent[0] - left[0], parent[1] - left[1]};
        consider(left, right, Predicate{f, Test::less_than, mid});
      }
    }
  }

  if (!best_pred) return std::nullopt;
  const double decrease = decrease_of(best_score, parent);
  if (decrease < params.min_impurity_decrease) return std::nullopt;
  return Split{*best_pred, decrease};
}

class Grower {
 public:
  Grower(DecisionTree& tree, const TrainParams& params, const ConfidenceOptions& confidence)
      : tree_(tree), params_(params), confidence_(confidence) {}

  std::size_t grow(const std::vector<const Row*>& rows, std::size_t depth) {
    Node node;
    node.counts = count_labels(rows);
    node.samples = rows.size();
    node.label = majority_label(node.counts, tree_.schema.positive_class());
    node.confidence_p = leaf_confidence(node.counts, confidence_);
    node.depth = depth;
    const std::size_t index = tree_.nodes.size();
    tree_.nodes.push_back(node);

    if (depth >= params_.max_depth) return index;
    const auto split = find_split(rows, tree_.schema, params_);
    if (!split) return index;

    std::vector<const Row*> yes, no;
    for (const Row* r : rows) (split->predicate.holds(r->values) ? yes : no).push_back(r);
    tree_.nodes[index].predicate = split->predicate;
    const std::size_t t = grow(yes, depth + 1);
    const std::size_t f = grow(no, depth + 1);
    tree_.nodes[index].if_true = t;
    tree_.nodes[index].if_false = f;
    return index;
  }

 private:
  DecisionTree& tree_;
  const TrainParams& params_;
  const ConfidenceOptions& confidence_;
};

ConfidenceOptions confidence_options(const TrainParams& params, const std::array<double, 2>& prior) {
  return {params.confidence_null, params.yates, prior};
}

}  // namespace

bool Predicate::holds(const Instance& instance) const {
  const double v = instance.at(feature);
  switch (test) {
    case Test::equals: return v == value;
    case Test::not_equals: return v != value;
    case Test::less_than: return v < value;
    case Test::greater_or_equal: return v >= value;
  }
  return false;
}

Predicate Predicate::negated() const {
  Predicate p = *this;
  switch (test) {
    case Test::equals: p.test = Test::not_equals; break;
    case Test::not_equals: p.test = Test::equals; break;
    case Test::less_than: p.test = Test::greater_or_equal; break;
    case Test::greater_or_equal: p.test = Test::less_than; break;
  }
  return p;
}

std::string describe(const Schema& schema, const Predicate& p) {
  const auto& f = schema.feature(p.feature);
  const std::string unit = f.unit.empty() ? "" : " " + f.unit;
  switch (p.test) {
    case Test::equals: return f.name + " = " + schema.format_value(p.feature, p.value);
    case Test::not_equals: return f.name + " ≠ " + schema.format_value(p.feature, p.value);
    case Test::less_than: return f.name + " < " + tabular::format_display(p.value) + unit;
    case Test::greater_or_equal: return f.name + " ≥ " + tabular::format_display(p.value) + unit;
  }
  return {};
}

void TrainParams::validate() const {
  if (max_depth < 1) throw Error("InvalidParams", "max_depth must be >= 1");
  if (min_samples_leaf < 1) throw Error("InvalidParams", "min_samples_leaf must be >= 1");
  if (!(min_impurity_decrease >= 0.0)) throw Error("InvalidParams", "min_impurity_decrease must be >= 0");
}

std::optional<Split> best_split(std::span<const Row> rows, const Schema& schema, const TrainParams& params) {
  params.validate();
  std::vector<const Row*> ptrs;
  ptrs.reserve(rows.size());
  for (const Row& r : rows) ptrs.push_back(&r);
  return find_split(ptrs, schema, params);
}

std::vector<std::size_t> DecisionTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf()) out.push_back(i);
  return out;
}

std::vector<std::size_t> DecisionTree::used_features() const {
  std::set<std::size_t> used;
  for (const auto& n : nodes)
    if (n.predicate) used.insert(n.predicate->feature);
  return {used.begin(), used.end()};
}

DecisionTree train(const Dataset& dataset, const TrainParams& params) {
  params.validate();
  if (dataset.empty()) throw Error("EmptyDataset", "cannot train on an empty dataset");

  DecisionTree tree;
  tree.schema = dataset.schema;
  tree.params = params;
  tree.train_size = dataset.size();

  std::vector<const Row*> rows;
  rows.reserve(dataset.size());
  ClassCounts counts{};
  for (const Row& r : dataset.rows) {
    if (r.values.size() != dataset.schema.size() || r.label > 1)
      throw Error("SchemaMismatch", "row does not conform to the dataset schema");
    rows.push_back(&r);
    ++counts[r.label];
  }
  const double n = static_cast<double>(dataset.size());
  tree.class_prior = {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n};

  tree.numeric_gaps.assign(dataset.schema.size(), 0.0);
  for (std::size_t f = 0; f < dataset.schema.size(); ++f) {
    if (dataset.schema.feature(f).is_categorical()) continue;
    std::vector<double> values;
    values.reserve(rows.size());
    for (const Row* r : rows) values.push_back(r->values[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double gap = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double d = values[i] - values[i - 1];
      if (gap == 0.0 || d < gap) gap = d;
    }
    tree.numeric_gaps[f] = gap;
  }

  const ConfidenceOptions confidence = confidence_options(params, tree.class_prior);
  Grower(tree, params, confidence).grow(rows, 0);
  return tree;
}

double Prediction::majority_fraction() const {
  if (samples == 0) return 0.0;
  return static_cast<double>(std::max(counts[0], counts[1])) / static_cast<double>(samples);
}

Prediction predict(const DecisionTree& tree, const Instance& instance) {
  tabular::check_instance(tree.schema, instance);
  Prediction out;
  std::size_t i = 0;
  while (!tree.nodes.at(i).is_leaf()) {
    const Node& node = tree.nodes[i];
    const bool taken = node.predicate->holds(instance);
    out.path.push_back({*node.predicate, taken});
    i = taken ? node.if_true : node.if_false;
  }
  const Node& leaf = tree.nodes[i];
  out.label = leaf.label;
  out.counts = leaf.counts;
  out.samples = leaf.samples;
  out.confidence_p = leaf.confidence_p;
  out.leaf = i;
  return out;
}

std::vector<PathStep> path_to(const DecisionTree& tree, std::size_t target) {
  std::vector<std::size_t> parent(tree.nodes.size(), tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const Node& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    parent.at(n.if_true) = i;
    parent.at(n.if_false) = i;
  }
  std::vector<PathStep> path;
  for (std::size_t i = target; i != 0;) {
    const std::size_t p = parent.at(i);
    if (p == tree.nodes.size()) throw Error("InvalidModel", "node is not reachable from the root");
    const Node& pn = tree.nodes[p];
    path.push_back({*pn.predicate, pn.if_true == i});
    i = p;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// --- serialization ----------------------------------------------------------

namespace {

const char* test_name(Test t) {
  switch (t) {
    case Test::equals: return "equals";
    case Test::not_equals: return "not_equals";
    case Test::less_than: return "less_than";
    case Test::greater_or_equal: return "greater_or_equal";
  }
  return "";
}

[[noreturn]] void invalid_model(const std::string& detail) { throw Error("InvalidModel", detail); }

}  // namespace

nlohmann::json predicate_to_json(const Schema& schema, const Predicate& p) {
  nlohmann::json j = {{"feature", schema.feature(p.feature).name}, {"test", test_name(p.test)}};
  if (p.test == Test::equals || p.test == Test::not_equals) j["level"] = schema.format_value(p.feature, p.value);
  else j["threshold"] = p.value;
  return j;
}

Predicate predicate_from_json(const Schema& schema, const nlohmann::json& j) {
  Predicate p;
  const auto name = j.at("feature").get<std::string>();
  const auto idx = schema.feature_index(name);
  if (!idx) invalid_model("predicate on unknown feature '" + name + "'");
  p.feature = *idx;
  const auto test = j.at("test").get<std::string>();
  const auto& f = schema.feature(p.feature);
  if (test == "equals" || test == "not_equals") {
    p.test = test == "equals" ? Test::equals : Test::not_equals;
    if (!f.is_categorical()) invalid_model("level test on numeric feature '" + name + "'");
    const auto level = f.level_index(j.at("level").get<std::string>());
    if (!level) invalid_model("undeclared level in predicate on '" + name + "'");
    p.value = static_cast<double>(*level);
  } else if (test == "less_than" || test == "greater_or_equal") {
    p.test = test == "less_than" ? Test::less_than : Test::greater_or_equal;
    if (f.is_categorical()) invalid_model("threshold test on categorical feature '" + name + "'");
    p.value = j.at("threshold").get<double>();
    if (!std::isfinite(p.value)) invalid_model("non-finite threshold");
  } else {
    invalid_model("unknown predicate test '" + test + "'");
  }
  return p;
}

nlohmann::json params_to_json(const TrainParams& params) {
  return {{"max_depth", params.max_depth},
          {"min_samples_leaf", params.min_samples_leaf},
          {"min_impurity_decrease", params.min_impurity_decrease},
          {"confidence_null", params.confidence_null == ConfidenceNull::uniform ? "uniform" : "training_prior"},
          {"yates", params.yates}};
}

TrainParams params_from_json(const nlohmann::json& j) {
  TrainParams p;
  try {
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    p.min_impurity_decrease = j.value("min_impurity_decrease", p.min_impurity_decrease);
    const auto null = j.value("confidence_null", std::string("uniform"));
    if (null == "uniform") p.confidence_null = ConfidenceNull::uniform;
    else if (null == "training_prior") p.confidence_null = ConfidenceNull::training_prior;
    else throw Error("InvalidParams", "confidence_null must be 'uniform' or 'training_prior'");
    p.yates = j.value("yates", p.yates);
  } catch (const nlohmann::json::exception& e) {
    throw Error("InvalidParams", e.what());
  }
  p.validate();
  return p;
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
  const Schema& schema = tree.schema;
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : tree.nodes) {
    nlohmann::json jn = {{"samples", n.samples},
                         {"counts", n.counts},
                         {"label", schema.class_name(n.label)},
                         {"confidence_p", n.confidence_p}};
    if (n.is_leaf()) {
      jn["kind"] = "leaf";
    } else {
      jn["kind"] = "internal";
      jn["predicate"] = predicate_to_json(schema, *n.predicate);
      jn["if_true"] = n.if_true;
      jn["if_false"] = n.if_false;
    }
    nodes.push_back(std::move(jn));
  }
  nlohmann::json gaps = nlohmann::json::object();
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (!schema.feature(f).is_categorical()) gaps[schema.feature(f).name] = tree.numeric_gaps.at(f);

  nlohmann::json j = {{"format", "riskweave.tree"},
                      {"version", kTreeFormatVersion},
                      {"schema", tabular::schema_to_json(schema)},
                      {"train_size", tree.train_size},
                      {"class_prior", tree.class_prior},
                      {"params", params_to_json(tree.params)},
                      {"numeric_gaps", std::move(gaps)},
                      {"nodes", std::move(nodes)}};
  if (tree.test_accuracy) j["test_accuracy"] = *tree.test_accuracy;
  return j;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "riskweave.tree") invalid_model("not a riskweave.tree document");
    if (j.at("version").get<int>() != kTreeFormatVersion)
      throw Error("UnsupportedVersion", "tree format version " + j.at("version").dump());

    DecisionTree tree;
    tree.schema = tabular::schema_from_json(j.at("schema"));
    tree.train_size = j.at("train_size").get<std::size_t>();
    tree.class_prior = j.at("class_prior").get<std::array<double, 2>>();
    tree.params = params_from_json(j.at("params"));
    tree.numeric_gaps.assign(tree.schema.size(), 0.0);
    for (auto it = j.at("numeric_gaps").begin(); it != j.at("numeric_gaps").end(); ++it) {
      const auto idx = tree.schema.feature_index(it.key());
      if (!idx) invalid_model("gap for unknown feature '" + it.key() + "'");
      tree.numeric_gaps[*idx] = it.value().get<double>();
    }
    if (j.contains("test_accuracy")) tree.test_accuracy = j.at("test_accuracy").get<double>();

    const auto& jnodes = j.at("nodes");
    if (!jnodes.is_array() || jnodes.empty()) invalid_model("tree has no nodes");
    for (const auto& jn : jnodes) {
      Node n;
      n.samples = jn.at("samples").get<std::size_t>();
      n.counts = jn.at("counts").get<ClassCounts>();
      const auto label = tree.schema.class_index(jn.at("label").get<std::string>());
      if (!label) invalid_model("node label is not a declared class");
      n.label = *label;
      n.confidence_p = jn.at("confidence_p").get<double>();
      const auto kind = jn.at("kind").get<std::string>();
      if (kind == "internal") {
        n.predicate = predicate_from_json(tree.schema, jn.at("predicate"));
        n.if_true = jn.at("if_true").get<std::size_t>();
        n.if_false = jn.at("if_false").get<std::size_t>();
      } else if (kind != "leaf") {
        invalid_model("unknown node kind '" + kind + "'");
      }
      if (n.samples != n.counts[0] + n.counts[1]) invalid_model("node samples differ from the sum of counts");
      if (!(n.confidence_p >= 0.0 && n.confidence_p <= 1.0)) invalid_model("confidence_p outside [0, 1]");
      tree.nodes.push_back(std::move(n));
    }

    // Children must come after their parent, each node must have exactly one parent.
    std::vector<int> parents(tree.nodes.size(), 0);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      Node& n = tree.nodes[i];
      if (n.is_leaf()) continue;
      for (std::size_t c : {n.if_true, n.if_false}) {
        if (c <= i || c >= tree.nodes.size()) invalid_model("child index out of order");
        ++parents[c];
        tree.nodes[c].depth = n.depth + 1;
      }
      if (n.samples != tree.nodes[n.if_true].samples + tree.nodes[n.if_false].samples)
        invalid_model("internal node samples differ from the sum of its children");
    }
    for (std::size_t i = 1; i < parents.size(); ++i)
      if (parents[i] != 1) invalid_model("node is not referenced exactly once");
    if (tree.nodes[0].samples != tree.train_size) invalid_model("root samples differ from train_size");
    return tree;
  } catch (const nlohmann::json::exception& e) {
    invalid_model(std::string("malformed tree JSON: ") + e.what());
  }
}

}  // namespace riskweave::cart
