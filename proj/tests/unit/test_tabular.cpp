#include <doctest.h>

#include <set>

#include "riskweave/error.hpp"
#include "riskweave/tabular.hpp"

using namespace riskweave;
using namespace riskweave::tabular;

namespace {

Schema small_schema() {
  FeatureSpec age{"Age", FeatureKind::categorical, {"25-45", "45-55"}, "", false};
  FeatureSpec bmi{"BMI", FeatureKind::numeric, {}, "kg/m2", false};
  return Schema({age, bmi}, TargetSpec{"CHD", {"low risk", "high risk"}, 1});
}

template <typename F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error("none", "");
}

}  // namespace

TEST_CASE("parse_csv reads rows in schema order regardless of column order") {
  const auto ds = parse_csv("BMI,CHD,Age\n22.5,low risk,45-55\n 30 ,high risk, 25-45 \n", small_schema());
  REQUIRE(ds.size() == 2);
  CHECK(ds.rows[0].values == Instance{1.0, 22.5});
  CHECK(ds.rows[0].label == 0);
  CHECK(ds.rows[1].values == Instance{0.0, 30.0});
  CHECK(ds.rows[1].label == 1);
}

TEST_CASE("parse_csv reports the offending row and column") {
  const auto e = capture([] { parse_csv("Age,BMI,CHD\n25-45,20,low risk\n99-100,21,low risk\n", small_schema()); });
  CHECK(e.code() == "ValueOutOfDomain");
  CHECK(e.context().at("row") == 2);
  CHECK(e.context().at("column") == "Age");
  CHECK(e.context().at("value") == "99-100");

  CHECK(capture([] { parse_csv("Age,BMI,CHD\n25-45,abc,low risk\n", small_schema()); }).code() == "ValueOutOfDomain");
  CHECK(capture([] { parse_csv("Age,BMI,CHD\n25-45,,low risk\n", small_schema()); }).code() == "ValueOutOfDomain");
  CHECK(capture([] { parse_csv("Age,BMI,CHD\n25-45,inf,low risk\n", small_schema()); }).code() == "ValueOutOfDomain");
  CHECK(capture([] { parse_csv("Age,BMI,CHD\n25-45,20,maybe\n", small_schema()); }).code() == "ValueOutOfDomain");
  CHECK(capture([] { parse_csv("", small_schema()); }).code() == "EmptyFile");
  CHECK(capture([] { parse_csv("Age,BMI,CHD\n", small_schema()); }).code() == "EmptyFile");
  CHECK(capture([] { parse_csv("Age,BMI,CHD\n25-45,20\n", small_schema()); }).code() == "MalformedRow");
  CHECK(capture([] { parse_csv("Age,BMI,Sex,CHD\n25-45,20,F,low risk\n", small_schema()); }).code() == "UnknownColumn");
  CHECK(capture([] { parse_csv("Age,CHD\n25-45,low risk\n", small_schema()); }).code() == "MissingColumn");
  CHECK(capture([] { parse_csv("Age,BMI,BMI,CHD\n25-45,1,2,low risk\n", small_schema()); }).code() ==
        "DuplicateColumn");
}

TEST_CASE("csv round trip is lossless") {
  const auto s = synthesize_chd_like(5, 300);
  const auto again = parse_csv(to_csv(s.data), s.data.schema);
  CHECK(again.rows == s.data.rows);
}

TEST_CASE("infer_schema types columns and orders classes") {
  const auto schema = infer_schema("a,b,y\n1,x,no\n2.5,z,yes\n3,x,no\n");
  CHECK(schema.feature(0).kind == FeatureKind::numeric);
  CHECK(schema.feature(1).kind == FeatureKind::categorical);
  CHECK(schema.feature(1).levels == std::vector<std::string>{"x", "z"});
  CHECK(schema.target().classes == std::array<std::string, 2>{"no", "yes"});
  CHECK(schema.positive_class() == 1);
  CHECK(infer_schema("a,y\n1,no\n2,yes\n", "no").positive_class() == 0);
  CHECK(capture([] { infer_schema("a,y\n1,no\n2,no\n"); }).code() == "TargetNotBinary");
  CHECK(capture([] { infer_schema("a,y\n1,no\n2,yes\n3,maybe\n"); }).code() == "TargetNotBinary");
  CHECK(capture([] { infer_schema("a,y\n1,no\n2,yes\n", "maybe"); }).code() == "UnknownLabel");
}

TEST_CASE("schema validation") {
  FeatureSpec a{"a", FeatureKind::numeric, {}, "", false};
  CHECK(capture([&] { Schema({a, a}, TargetSpec{"y", {"0", "1"}, 1}); }).code() == "InvalidSchema");
  CHECK(capture([&] { Schema({a}, TargetSpec{"y", {"0", "0"}, 1}); }).code() == "InvalidSchema");
  CHECK(capture([&] { Schema({a}, TargetSpec{"a", {"0", "1"}, 1}); }).code() == "InvalidSchema");
  FeatureSpec c{"c", FeatureKind::categorical, {}, "", false};
  CHECK(capture([&] { Schema({c}, TargetSpec{"y", {"0", "1"}, 1}); }).code() == "InvalidSchema");
  FeatureSpec d{"d", FeatureKind::categorical, {"u", "u"}, "", false};
  CHECK(capture([&] { Schema({d}, TargetSpec{"y", {"0", "1"}, 1}); }).code() == "InvalidSchema");
}

TEST_CASE("schema text and json round trip") {
  for (const auto& schema : {chd_schema(), ivf_schema(), small_schema()}) {
    CHECK(parse_schema_text(schema_to_text(schema)) == schema);
    CHECK(schema_from_json(schema_to_json(schema)) == schema);
  }
  const auto parsed = parse_schema_text(
      "# comment\n[target]\nname = y\nclasses = no, yes\npositive = yes\n\n[feature]\nname = x\nkind = numeric\n"
      "unit = cm\n");
  CHECK(parsed.feature(0).unit == "cm");
  CHECK(parsed.positive_class() == 1);
}

TEST_CASE("split partitions rows deterministically") {
  const auto s = synthesize_chd_like(1, 2279);
  const auto [train, test] = split(s.data, 0.2, 7);
  CHECK(test.size() == 456);
  CHECK(train.size() == 2279 - 456);
  CHECK(train.provenance.ends_with("/train"));
  const auto [train2, test2] = split(s.data, 0.2, 7);
  CHECK(test.rows == test2.rows);
  const auto [train3, test3] = split(s.data, 0.2, 8);
  CHECK(test.rows != test3.rows);
  CHECK(capture([&] { split(s.data, 0.0, 1); }).code() == "FractionOutOfRange");
  CHECK(capture([&] { split(s.data, 1.0, 1); }).code() == "FractionOutOfRange");
}

TEST_CASE("instance json conversion validates against the schema") {
  const Schema schema = small_schema();
  const auto x = instance_from_json(schema, {{"Age", "45-55"}, {"BMI", 27.5}});
  CHECK(x == Instance{1.0, 27.5});
  CHECK(instance_to_json(schema, x) == nlohmann::json{{"Age", "45-55"}, {"BMI", 27.5}});
  CHECK(instance_from_json(schema, {{"Age", "45-55"}, {"BMI", "27.5"}}) == x);
  CHECK(capture([&] { instance_from_json(schema, {{"Age", "45-55"}}); }).code() == "SchemaMismatch");
  CHECK(capture([&] { instance_from_json(schema, {{"Age", "90"}, {"BMI", 1}}); }).code() == "SchemaMismatch");
  CHECK(capture([&] { instance_from_json(schema, {{"Age", "45-55"}, {"BMI", 1}, {"Zip", 1}}); }).code() ==
        "SchemaMismatch");
  CHECK(capture([&] { check_instance(schema, {2.0, 1.0}); }).code() == "SchemaMismatch");
}

TEST_CASE("number formatting") {
  CHECK(format_number(68.5) == "68.5");
  CHECK(format_number(0.1 + 0.2) == "0.30000000000000004");
  CHECK(format_display(0.1 + 0.2) == "0.3");
  CHECK(parse_number(" 1e3 ") == 1000.0);
  CHECK(!parse_number("1,5"));
  CHECK(!parse_number("nan"));
}

TEST_CASE("synthetic cohort follows its planted rules up to label noise") {
  const auto clean = synthesize_chd_like(11, 3000, 0.0);
  for (const auto& r : clean.data.rows) CHECK(r.label == chd_planted_label(clean.data.schema, r.values));
  const auto noisy = synthesize_chd_like(11, 3000, 0.05);
  std::size_t flipped = 0;
  for (const auto& r : noisy.data.rows) flipped += r.label != chd_planted_label(noisy.data.schema, r.values);
  CHECK(flipped > 100);
  CHECK(flipped < 200);
  CHECK(capture([] { synthesize_chd_like(1, 10); }).code() == "NTooSmall");
  CHECK(std::set<std::string>(clean.planted_features.begin(), clean.planted_features.end()) ==
        std::set<std::string>{"Age", "Cholesterol HDL ratio", "Daily alcohol consumption"});
}
