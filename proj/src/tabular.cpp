#include "riskweave/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "riskweave/error.hpp"
#include "riskweave/rng.hpp"

namespace riskweave::tabular {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_on(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

[[noreturn]] void invalid_schema(const std::string& detail, nlohmann::json context = nlohmann::json::object()) {
  throw Error("InvalidSchema", detail, std::move(context));
}

}  // namespace

std::optional<std::size_t> FeatureSpec::level_index(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return i;
  return std::nullopt;
}

Schema::Schema(std::vector<FeatureSpec> features, TargetSpec target)
    : features_(std::move(features)), target_(std::move(target)) {
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) invalid_schema("feature name must be non-empty");
    if (!names.insert(f.name).second) invalid_schema("duplicate feature name", {{"feature", f.name}});
    if (f.is_categorical()) {
      if (f.levels.empty()) invalid_schema("categorical feature needs levels", {{"feature", f.name}});
      std::set<std::string> seen;
      for (const auto& level : f.levels) {
        if (level.empty()) invalid_schema("empty level", {{"feature", f.name}});
        if (!seen.insert(level).second) invalid_schema("duplicate level", {{"feature", f.name}, {"level", level}});
      }
    }
  }
  if (target_.name.empty()) invalid_schema("target name must be non-empty");
  if (names.count(target_.name)) invalid_schema("target name collides with a feature", {{"target", target_.name}});
  if (target_.classes[0].empty() || target_.classes[1].empty() || target_.classes[0] == target_.classes[1])
    invalid_schema("target needs two distinct class labels");
  if (target_.positive > 1) invalid_schema("positive class index out of range");
}

std::optional<std::size_t> Schema::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> Schema::class_index(std::string_view label) const {
  for (std::size_t i = 0; i < 2; ++i)
    if (target_.classes[i] == label) return i;
  return std::nullopt;
}

std::string Schema::format_value(std::size_t feature, double value) const {
  const auto& f = features_.at(feature);
  if (f.is_categorical()) return f.levels.at(static_cast<std::size_t>(value));
  return format_number(value);
}

double Schema::parse_value(std::size_t feature, std::string_view text) const {
  const auto& f = features_.at(feature);
  if (f.is_categorical()) {
    if (auto idx = f.level_index(text)) return static_cast<double>(*idx);
  } else if (auto v = parse_number(text)) {
    return *v;
  }
  throw Error("ValueOutOfDomain", "value '" + std::string(text) + "' not in domain of '" + f.name + "'",
              {{"column", f.name}, {"value", std::string(text)}});
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string format_display(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 10);
  return std::string(buf, end);
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::general);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

CsvTable read_csv_table(std::string_view text) {
  CsvTable table;
  bool have_header = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    const std::string_view line = text.substr(start, pos - start);
    start = pos + 1;
    if (trim(line).empty()) continue;
    auto cells = split_on(line, ',');
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error("MalformedRow", "row has " + std::to_string(cells.size()) + " cells, header has " +
                                      std::to_string(table.header.size()),
                  {{"row", table.rows.size() + 1}});
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw Error("EmptyFile", "no header line");
  return table;
}

Dataset parse_csv(std::string_view text, const Schema& schema, std::string provenance) {
  const CsvTable table = read_csv_table(text);

  // column position -> feature index, or schema.size() for the target
  std::vector<std::size_t> column_slot(table.header.size());
  std::vector<bool> seen(schema.size() + 1, false);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    std::size_t slot;
    if (name == schema.target().name) {
      slot = schema.size();
    } else if (auto idx = schema.feature_index(name)) {
      slot = *idx;
    } else {
      throw Error("UnknownColumn", "column '" + name + "' is not in the schema", {{"column", name}});
    }
    if (seen[slot]) throw Error("DuplicateColumn", "column '" + name + "' appears twice", {{"column", name}});
    seen[slot] = true;
    column_slot[c] = slot;
  }
  for (std::size_t i = 0; i <= schema.size(); ++i) {
    if (!seen[i]) {
      const auto& name = i == schema.size() ? schema.target().name : schema.feature(i).name;
      throw Error("MissingColumn", "column '" + name + "' is missing", {{"column", name}});
    }
  }
  if (table.rows.empty()) throw Error("EmptyFile", "no data rows");

  Dataset ds{schema, {}, std::move(provenance)};
  ds.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Row row;
    row.values.assign(schema.size(), 0.0);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const std::string& cell = table.rows[r][c];
      const std::size_t slot = column_slot[c];
      if (slot == schema.size()) {
        auto label = schema.class_index(cell);
        if (!label)
          throw Error("ValueOutOfDomain", "target value '" + cell + "' is not a declared class",
                      {{"row", r + 1}, {"column", schema.target().name}, {"value", cell}});
        row.label = *label;
        continue;
      }
      try {
        row.values[slot] = schema.parse_value(slot, cell);
      } catch (const Error& e) {
        auto ctx = e.context();
        ctx["row"] = r + 1;
        throw Error(e.code(), e.detail(), ctx);
      }
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

std::string to_csv(const Dataset& dataset) {
  const Schema& schema = dataset.schema;
  std::string out;
  for (const auto& f : schema.features()) out += f.name + ",";
  out += schema.target().name + "\n";
  for (const auto& row : dataset.rows) {
    for (std::size_t i = 0; i < schema.size(); ++i) out += schema.format_value(i, row.values[i]) + ",";
    out += schema.class_name(row.label) + "\n";
  }
  return out;
}

Schema infer_schema(std::string_view text, std::optional<std::string> positive_label) {
  const CsvTable table = read_csv_table(text);
  if (table.rows.empty()) throw Error("EmptyFile", "no data rows");
  if (table.header.size() < 2) invalid_schema("need at least one feature column and a target column");

  const std::size_t target_col = table.header.size() - 1;
  std::vector<FeatureSpec> features;
  for (std::size_t c = 0; c < target_col; ++c) {
    bool numeric = true;
    bool any = false;
    std::set<std::string> levels;
    for (const auto& row : table.rows) {
      const std::string& cell = row[c];
      if (cell.empty()) continue;
      any = true;
      levels.insert(cell);
      if (numeric && !parse_number(cell)) numeric = false;
    }
    if (!any) invalid_schema("column has no values", {{"column", table.header[c]}});
    FeatureSpec f;
    f.name = table.header[c];
    if (numeric) {
      f.kind = FeatureKind::numeric;
    } else {
      f.kind = FeatureKind::categorical;
      f.levels.assign(levels.begin(), levels.end());
    }
    features.push_back(std::move(f));
  }

  std::set<std::string> labels;
  for (const auto& row : table.rows)
    if (!row[target_col].empty()) labels.insert(row[target_col]);
  if (labels.size() != 2)
    throw Error("TargetNotBinary", "target column has " + std::to_string(labels.size()) + " distinct labels",
                {{"column", table.header[target_col]}});

  TargetSpec target;
  target.name = table.header[target_col];
  target.classes = {*labels.begin(), *labels.rbegin()};
  target.positive = 1;
  if (positive_label) {
    if (*positive_label == target.classes[0]) {
      target.positive = 0;
    } else if (*positive_label != target.classes[1]) {
      throw Error("UnknownLabel", "positive label '" + *positive_label + "' not observed in target");
    }
  }
  return Schema(std::move(features), std::move(target));
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("FractionOutOfRange", "test fraction must lie in (0, 1)", {{"test_fraction", test_fraction}});
  const std::size_t n = dataset.size();
  if (n < 2) throw Error("DatasetTooSmall", "split needs at least two rows", {{"rows", n}});

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(order);

  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  Dataset train{dataset.schema, {}, dataset.provenance + "/train"};
  Dataset test{dataset.schema, {}, dataset.provenance + "/test"};
  train.rows.reserve(train_idx.size());
  test.rows.reserve(test_idx.size());
  for (auto i : train_idx) train.rows.push_back(dataset.rows[i]);
  for (auto i : test_idx) test.rows.push_back(dataset.rows[i]);
  return {std::move(train), std::move(test)};
}

void check_instance(const Schema& schema, const Instance& instance) {
  if (instance.size() != schema.size())
    throw Error("SchemaMismatch", "instance has " + std::to_string(instance.size()) + " values, schema has " +
                                      std::to_string(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.feature(i);
    const double v = instance[i];
    const bool ok = f.is_categorical()
                        ? (v >= 0.0 && v < static_cast<double>(f.levels.size()) && std::floor(v) == v)
                        : std::isfinite(v);
    if (!ok) throw Error("SchemaMismatch", "value out of domain for '" + f.name + "'", {{"column", f.name}});
  }
}

Instance instance_from_json(const Schema& schema, const nlohmann::json& record) {
  if (!record.is_object()) throw Error("SchemaMismatch", "instance must be a JSON object");
  for (auto it = record.begin(); it != record.end(); ++it) {
    if (it.key() != schema.target().name && !schema.feature_index(it.key()))
      throw Error("SchemaMismatch", "unknown feature '" + it.key() + "'", {{"column", it.key()}});
  }
  Instance out(schema.size(), 0.0);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.feature(i);
    auto it = record.find(f.name);
    if (it == record.end()) throw Error("SchemaMismatch", "missing feature '" + f.name + "'", {{"column", f.name}});
    const auto& v = *it;
    if (f.is_categorical()) {
      auto idx = v.is_string() ? f.level_index(v.get<std::string>()) : std::nullopt;
      if (!idx)
        throw Error("SchemaMismatch", "value for '" + f.name + "' is not a declared level",
                    {{"column", f.name}, {"value", v}});
      out[i] = static_cast<double>(*idx);
    } else {
      std::optional<double> num;
      if (v.is_number()) num = v.get<double>();
      else if (v.is_string()) num = parse_number(v.get<std::string>());
      if (!num || !std::isfinite(*num))
        throw Error("SchemaMismatch", "value for '" + f.name + "' is not a number", {{"column", f.name}, {"value", v}});
      out[i] = *num;
    }
  }
  return out;
}

nlohmann::json instance_to_json(const Schema& schema, const Instance& instance) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.feature(i);
    if (f.is_categorical()) j[f.name] = f.levels.at(static_cast<std::size_t>(instance.at(i)));
    else j[f.name] = instance.at(i);
  }
  return j;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json jf = {{"name", f.name}, {"allow_missing", f.allow_missing}};
    if (f.is_categorical()) {
      jf["kind"] = "categorical";
      jf["levels"] = f.levels;
    } else {
      jf["kind"] = "numeric";
      jf["unit"] = f.unit;
    }
    features.push_back(std::move(jf));
  }
  const auto& t = schema.target();
  return {{"features", std::move(features)},
          {"target", {{"name", t.name}, {"classes", t.classes}, {"positive", t.classes[t.positive]}}}};
}

Schema schema_from_json(const nlohmann::json& j) {
  try {
    std::vector<FeatureSpec> features;
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const auto kind = jf.at("kind").get<std::string>();
      if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
        f.levels = jf.at("levels").get<std::vector<std::string>>();
      } else if (kind == "numeric") {
        f.kind = FeatureKind::numeric;
        f.unit = jf.value("unit", "");
      } else {
        invalid_schema("unknown feature kind '" + kind + "'", {{"feature", f.name}});
      }
      f.allow_missing = jf.value("allow_missing", false);
      features.push_back(std::move(f));
    }
    const auto& jt = j.at("target");
    TargetSpec t;
    t.name = jt.at("name").get<std::string>();
    const auto classes = jt.at("classes").get<std::vector<std::string>>();
    if (classes.size() != 2) invalid_schema("target needs exactly two classes");
    t.classes = {classes[0], classes[1]};
    const auto positive = jt.at("positive").get<std::string>();
    if (positive == classes[0]) t.positive = 0;
    else if (positive == classes[1]) t.positive = 1;
    else invalid_schema("positive class is not one of the classes");
    return Schema(std::move(features), std::move(t));
  } catch (const nlohmann::json::exception& e) {
    invalid_schema(std::string("malformed schema JSON: ") + e.what());
  }
}

Schema parse_schema_text(std::string_view text) {
  struct Section {
    std::string kind;
    std::map<std::string, std::string> values;
    std::size_t line = 0;
  };
  std::vector<Section> sections;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = trim(text.substr(start, pos - start));
    start = pos + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') invalid_schema("unterminated section header", {{"line", line_no}});
      std::string kind(trim(line.substr(1, line.size() - 2)));
      if (kind != "target" && kind != "feature") invalid_schema("unknown section '" + kind + "'", {{"line", line_no}});
      sections.push_back({kind, {}, line_no});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) invalid_schema("expected key = value", {{"line", line_no}});
    if (sections.empty()) invalid_schema("key outside of a section", {{"line", line_no}});
    std::string key(trim(line.substr(0, eq)));
    if (!sections.back().values.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
      invalid_schema("duplicate key '" + key + "'", {{"line", line_no}});
  }

  std::vector<FeatureSpec> features;
  std::optional<TargetSpec> target;
  for (const auto& s : sections) {
    auto get = [&](const std::string& key) -> const std::string& {
      auto it = s.values.find(key);
      if (it == s.values.end()) invalid_schema("missing key '" + key + "'", {{"line", s.line}});
      return it->second;
    };
    if (s.kind == "target") {
      if (target) invalid_schema("more than one [target] section", {{"line", s.line}});
      TargetSpec t;
      t.name = get("name");
      const auto classes = split_on(get("classes"), ',');
      if (classes.size() != 2) invalid_schema("target needs exactly two classes", {{"line", s.line}});
      t.classes = {classes[0], classes[1]};
      const auto& positive = get("positive");
      if (positive == classes[0]) t.positive = 0;
      else if (positive == classes[1]) t.positive = 1;
      else invalid_schema("positive class is not one of the classes", {{"line", s.line}});
      target = std::move(t);
    } else {
      FeatureSpec f;
      f.name = get("name");
      const auto& kind = get("kind");
      if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
        f.levels = split_on(get("levels"), ',');
      } else if (kind == "numeric") {
        f.kind = FeatureKind::numeric;
        if (auto it = s.values.find("unit"); it != s.values.end()) f.unit = it->second;
      } else {
        invalid_schema("unknown kind '" + kind + "'", {{"line", s.line}});
      }
      if (auto it = s.values.find("allow_missing"); it != s.values.end()) f.allow_missing = it->second == "true";
      features.push_back(std::move(f));
    }
  }
  if (!target) invalid_schema("missing [target] section");
  return Schema(std::move(features), std::move(*target));
}

std::string schema_to_text(const Schema& schema) {
  const auto& t = schema.target();
  std::string out = "[target]\nname = " + t.name + "\nclasses = " + t.classes[0] + ", " + t.classes[1] +
                    "\npositive = " + t.classes[t.positive] + "\n";
  for (const auto& f : schema.features()) {
    out += "\n[feature]\nname = " + f.name + "\n";
    if (f.is_categorical()) {
      out += "kind = categorical\nlevels = " + join(f.levels, ", ") + "\n";
    } else {
      out += "kind = numeric\n";
      if (!f.unit.empty()) out += "unit = " + f.unit + "\n";
    }
    if (f.allow_missing) out += "allow_missing = true\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

FeatureSpec categorical(std::string name, std::vector<std::string> levels) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  f.levels = std::move(levels);
  return f;
}

FeatureSpec numeric(std::string name, std::string unit) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::numeric;
  f.unit = std::move(unit);
  return f;
}

// Rounds to `digits` decimals; dividing by the power of ten keeps results on the nearest double.
double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

// Feature positions in chd_schema().
enum ChdColumn : std::size_t {
  kAge,
  kSex,
  kCholHdl,
  kAlcohol,
  kBmi,
  kSystolic,
  kDiastolic,
  kSmoking,
  kDiabetes,
  kTriglycerides,
  kHeartRate,
  kActivity,
  kEducation,
};

constexpr double kAlcoholThreshold = 68.5;

}  // namespace

Schema chd_schema() {
  std::vector<FeatureSpec> features = {
      categorical("Age", {"25-45", "45-55", "55-65", "65-75", "75-90"}),
      categorical("Sex", {"Female", "Male"}),
      categorical("Cholesterol HDL ratio", {"Normal", "High"}),
      numeric("Daily alcohol consumption", "ml/day"),
      numeric("BMI", "kg/m2"),
      numeric("Systolic blood pressure", "mmHg"),
      numeric("Diastolic blood pressure", "mmHg"),
      categorical("Smoking", {"Never", "Former", "Current"}),
      categorical("Diabetes", {"No", "Yes"}),
      numeric("Triglycerides", "mmol/L"),
      numeric("Heart rate", "bpm"),
      categorical("Physical activity", {"Low", "Moderate", "High"}),
      categorical("Education", {"Primary", "Secondary", "Tertiary"}),
  };
  return Schema(std::move(features), TargetSpec{"CHD", {"low risk", "high risk"}, 1});
}

std::size_t chd_planted_label(const Schema& schema, const Instance& v) {
  const auto& age = schema.feature(kAge).levels;
  const auto band = age.at(static_cast<std::size_t>(v[kAge]));
  if (band == "75-90") return 1;
  if (band == "65-75" && schema.format_value(kCholHdl, v[kCholHdl]) == "High" && v[kAlcohol] >= kAlcoholThreshold)
    return 1;
  return 0;
}

SyntheticChd synthesize_chd_like(std::uint64_t seed, std::size_t n, double noise) {
  if (n < 100) throw Error("NTooSmall", "synthetic cohort needs n >= 100", {{"n", n}});
  if (!(noise >= 0.0 && noise < 0.5)) throw Error("InvalidArgument", "noise must lie in [0, 0.5)", {{"noise", noise}});

  SyntheticChd out;
  out.noise = noise;
  out.data.schema = chd_schema();
  out.data.provenance = "synthetic-chd(seed=" + std::to_string(seed) + ",n=" + std::to_string(n) +
                        ",noise=" + format_number(noise) + ")";
  out.rules = {
      {{"Age = 75-90"}, "high risk"},
      {{"Age = 65-75", "Cholesterol HDL ratio = High", "Daily alcohol consumption >= 68.5 ml/day"}, "high risk"},
  };
  out.planted_features = {"Age", "Cholesterol HDL ratio", "Daily alcohol consumption"};

  SplitMix64 rng(seed);
  out.data.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Instance v(13, 0.0);
    v[kAge] = static_cast<double>(rng.categorical({0.25, 0.22, 0.20, 0.20, 0.13}));
    v[kSex] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    v[kCholHdl] = rng.bernoulli(0.45) ? 1.0 : 0.0;
    v[kAlcohol] = rng.bernoulli(0.2) ? 0.0 : round_to(std::exp(rng.normal(3.7, 0.8)), 1);
    v[kBmi] = round_to(std::clamp(rng.normal(26.5, 4.5), 15.0, 55.0), 1);
    v[kSystolic] = std::round(std::clamp(rng.normal(130.0, 18.0), 85.0, 220.0));
    v[kDiastolic] = std::round(std::clamp(rng.normal(80.0, 10.0), 45.0, 130.0));
    v[kSmoking] = static_cast<double>(rng.categorical({0.5, 0.3, 0.2}));
    v[kDiabetes] = rng.bernoulli(0.08) ? 1.0 : 0.0;
    v[kTriglycerides] = round_to(std::exp(rng.normal(0.3, 0.45)), 2);
    v[kHeartRate] = std::round(std::clamp(rng.normal(72.0, 11.0), 40.0, 140.0));
    v[kActivity] = static_cast<double>(rng.categorical({0.35, 0.4, 0.25}));
    v[kEducation] = static_cast<double>(rng.categorical({0.3, 0.45, 0.25}));

    std::size_t label = chd_planted_label(out.data.schema, v);
    if (rng.bernoulli(noise)) label = 1 - label;
    out.data.rows.push_back({std::move(v), label});
  }
  return out;
}

Schema ivf_schema() {
  std::vector<FeatureSpec> features = {
      numeric("Age", "years"),
      numeric("Years of infertility", "years"),
      numeric("Number of eggs collected in first IVF cycle", "eggs"),
      categorical("Type of embryo transfer",
                  {"Stage 2 embryos transferred on day 2 or 3", "Blastocysts transferred on day 5 or 6",
                   "No embryos transferred"}),
      categorical("Previous pregnancy", {"No", "Yes"}),
      categorical("Tubal infertility", {"No", "Yes"}),
      categorical("First cycle type", {"IVF", "ICSI"}),
      categorical("Embryos frozen in first cycle", {"No", "Yes"}),
  };
  return Schema(std::move(features), TargetSpec{"Live birth", {"No", "Yes"}, 1});
}

}  // namespace riskweave::tabular
