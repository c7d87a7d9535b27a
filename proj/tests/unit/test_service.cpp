#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>

#include "riskweave/service.hpp"

using namespace riskweave;
using namespace riskweave::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("riskweave-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Config config_for(const fs::path& root) {
  Config c;
  c.storage_root = root;
  return c;
}

json chd_train_body() {
  const auto s = tabular::synthesize_chd_like(1, 800);
  return {{"csv", tabular::to_csv(s.data)}, {"schema", tabular::schema_to_text(tabular::chd_schema())}, {"seed", 7}};
}

json chd_features() {
  return {{"Age", "55-65"},
          {"Sex", "Male"},
          {"Cholesterol HDL ratio", "High"},
          {"Daily alcohol consumption", 10},
          {"BMI", 27},
          {"Systolic blood pressure", 130},
          {"Diastolic blood pressure", 82},
          {"Smoking", "Former"},
          {"Diabetes", "No"},
          {"Triglycerides", 1.6},
          {"Heart rate", 72},
          {"Physical activity", "Moderate"},
          {"Education", "Secondary"}};
}

json ivf_features() {
  return {{"Age", 34},
          {"Years of infertility", 2},
          {"Number of eggs collected in first IVF cycle", 12},
          {"Type of embryo transfer", "Blastocysts transferred on day 5 or 6"},
          {"Previous pregnancy", "No"},
          {"Tubal infertility", "No"},
          {"First cycle type", "IVF"},
          {"Embryos frozen in first cycle", "Yes"}};
}

Response post(Service& s, const std::string& path, const json& body) { return s.handle("POST", path, body.dump()); }

}  // namespace

TEST_CASE("status codes for error codes") {
  CHECK(status_for("UnknownModel") == 404);
  CHECK(status_for("NotFound") == 404);
  CHECK(status_for("MethodNotAllowed") == 405);
  CHECK(status_for("UnknownLabel") == 422);
  CHECK(status_for("CycleOutOfRange") == 422);
  CHECK(status_for("StorageError") == 500);
  CHECK(status_for("ValueOutOfDomain") == 400);
}

TEST_CASE("tree model lifecycle over the request handler") {
  TempDir dir;
  Service svc(config_for(dir.path));
  CHECK(svc.handle("GET", "/health", "").body.at("models") == 0);

  const auto created = post(svc, "/models", chd_train_body());
  REQUIRE(created.status == 201);
  const std::string id = created.body.at("model_id");
  CHECK(id == "m000001");
  CHECK(created.body.at("kind") == "tree");
  CHECK(created.body.at("accuracy").get<double>() > 0.8);

  const auto meta = svc.handle("GET", "/models/" + id, "");
  CHECK(meta.status == 200);
  CHECK(meta.body.at("summary").at("text").get<std::string>().starts_with("The model only takes into account"));
  CHECK(svc.handle("GET", "/models", "").body.at("models").size() == 1);

  const auto pred = post(svc, "/models/" + id + "/predict", {{"features", chd_features()}});
  REQUIRE(pred.status == 200);
  CHECK(pred.body.at("model_id") == id);
  CHECK(pred.body.contains("certainty_phrase"));
  CHECK(post(svc, "/models/" + id + "/predict", chd_features()).body == pred.body);

  const auto exp = post(svc, "/models/" + id + "/explain", {{"features", chd_features()}});
  CHECK(exp.status == 200);
  CHECK(exp.body.at("text").get<std::string>().find(pred.body.at("certainty_phrase").get<std::string>()) !=
        std::string::npos);

  auto wi = chd_features();
  wi["target_label"] = "high risk";
  CHECK(post(svc, "/models/" + id + "/whatif", wi).status == 200);
  wi["target_label"] = "medium";
  const auto bad_label = post(svc, "/models/" + id + "/whatif", wi);
  CHECK(bad_label.status == 422);
  CHECK(bad_label.body.at("error") == "UnknownLabel");

  const auto cov = post(svc, "/models/" + id + "/coverage", {{"asserted", {"smoking status", "family history"}}});
  CHECK(cov.status == 200);
  CHECK(cov.body.at("unmodeled") == json::array({"smoking status", "family history"}));

  auto wrong = chd_features();
  wrong["Age"] = "12-18";
  const auto r = post(svc, "/models/" + id + "/predict", {{"features", wrong}});
  CHECK(r.status == 400);
  CHECK(r.body.at("error") == "SchemaMismatch");
  CHECK(r.body.contains("detail"));
  CHECK(svc.handle("POST", "/models/" + id + "/predict", "{not json").body.at("error") == "InvalidJson");
  CHECK(svc.handle("GET", "/models/m999999", "").status == 404);
  CHECK(svc.handle("DELETE", "/models/" + id, "").status == 405);
  CHECK(svc.handle("GET", "/nowhere", "").status == 404);
  CHECK(post(svc, "/models", {{"schema", "x"}}).body.at("field") == "csv");
}

TEST_CASE("models survive a restart") {
  TempDir dir;
  json first;
  std::string id;
  {
    Service svc(config_for(dir.path));
    id = post(svc, "/models", chd_train_body()).body.at("model_id");
    first = post(svc, "/models/" + id + "/predict", chd_features()).body;
  }
  std::ofstream(dir.path / "models" / ".m000009.json.tmp") << "{partial";
  Service again(config_for(dir.path));
  CHECK(!fs::exists(dir.path / "models" / ".m000009.json.tmp"));
  CHECK(post(again, "/models/" + id + "/predict", chd_features()).body.dump() == first.dump());
  CHECK(post(again, "/models", chd_train_body()).body.at("model_id") == "m000002");
}

TEST_CASE("cycle models") {
  TempDir dir;
  Service svc(config_for(dir.path));
  const auto patients = cycles::synthesize_ivf(1, 2000);
  const auto created = post(svc, "/cycles", {{"csv", cycles::patients_to_csv(tabular::ivf_schema(), patients)}});
  REQUIRE(created.status == 201);
  const std::string id = created.body.at("model_id");
  CHECK(created.body.at("kind") == "cycles");
  CHECK(created.body.at("c_index").get<double>() > 0.6);

  auto body = ivf_features();
  body["n_cycles"] = 3;
  const auto r = post(svc, "/cycles/" + id + "/predict", body);
  REQUIRE(r.status == 200);
  CHECK(r.body.at("cumulative").size() == 3);
  CHECK(r.body.at("text").get<std::string>().starts_with("Over your first 3 cycles combined"));
  body["n_cycles"] = 7;
  CHECK(post(svc, "/cycles/" + id + "/predict", body).status == 422);
  body["n_cycles"] = "two";
  CHECK(post(svc, "/cycles/" + id + "/predict", body).status == 400);
  CHECK(post(svc, "/models/" + id + "/predict", ivf_features()).body.at("error") == "WrongModelKind");
  CHECK(post(svc, "/models/" + id + "/coverage", {{"asserted", {"smoking status"}}}).status == 200);
  CHECK(svc.handle("GET", "/models/" + id, "").body.at("max_cycles") == 6);
}

TEST_CASE("feedback is validated and appended") {
  TempDir dir;
  Service svc(config_for(dir.path));
  const std::string id = post(svc, "/models", chd_train_body()).body.at("model_id");
  const json ok = {{"model_id", id},
                   {"answers", {{"understandability", 4}, {"comprehension", {{"q1", "b"}}}}},
                   {"comment", "clear"}};
  const auto r = post(svc, "/feedback", ok);
  CHECK(r.status == 201);
  CHECK(r.body.at("status") == "recorded");

  CHECK(post(svc, "/feedback", {{"model_id", id}, {"answers", {{"understandability", 6}}}}).status == 400);
  CHECK(post(svc, "/feedback", {{"model_id", id}, {"answers", {{"understandability", 3}}}, {"ip", "1.2.3.4"}})
            .status == 400);
  CHECK(post(svc, "/feedback", {{"answers", {{"understandability", 3}}}}).status == 400);
  CHECK(post(svc, "/feedback", {{"model_id", "m404"}, {"answers", {{"understandability", 3}}}}).status == 404);

  std::ifstream in(dir.path / "feedback.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    CHECK(j.at("model_id") == id);
    CHECK(j.at("schema_version") == 1);
    CHECK(!j.contains("ip"));
    ++lines;
  }
  CHECK(lines == 1);
}

TEST_CASE("concurrent feedback lines stay whole") {
  TempDir dir;
  Service svc(config_for(dir.path));
  const std::string id = post(svc, "/models", chd_train_body()).body.at("model_id");
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i)
        post(svc, "/feedback",
             {{"model_id", id}, {"comment", std::string(200, static_cast<char>('a' + t))},
              {"answers", {{"understandability", 1 + i % 5}}}});
    });
  for (auto& th : threads) th.join();
  std::ifstream in(dir.path / "feedback.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    CHECK(json::accept(line));
    ++lines;
  }
  CHECK(lines == 200);
}

TEST_CASE("entries and environment overrides") {
  Config c;
  setenv("RISKWEAVE_PORT", "9123", 1);
  setenv("RISKWEAVE_STORAGE_ROOT", "/tmp/rw-elsewhere", 1);
  const auto e = apply_env(c);
  unsetenv("RISKWEAVE_PORT");
  unsetenv("RISKWEAVE_STORAGE_ROOT");
  CHECK(e.port == 9123);
  CHECK(e.storage_root == "/tmp/rw-elsewhere");
  CHECK(apply_env(c).port == 8080);
  const auto ts = utc_timestamp();
  CHECK(ts.size() == 24);
  CHECK(ts.ends_with("Z"));
}
