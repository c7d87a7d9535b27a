#include "riskweave/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace riskweave::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error("StorageError", what + " " + path.string() + ": " + std::strerror(errno), {{"path", path.string()}});
}

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Temp file in the same directory, fsync, rename over the target, fsync the directory.
void write_atomically(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot create", tmp);
  try {
    write_all(fd, content, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) io_error("cannot flush", tmp);
  if (::rename(tmp.c_str(), target.c_str()) != 0) io_error("cannot rename", tmp);
  const int dfd = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("StorageError", "cannot read " + path.string(), {{"path", path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::size_t> id_number(std::string_view id) {
  if (id.size() < 2 || id[0] != 'm') return std::nullopt;
  std::size_t n = 0;
  for (char c : id.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  return n;
}

std::string make_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%06zu", n);
  return buf;
}

std::vector<std::string_view> segments(std::string_view path) {
  std::vector<std::string_view> out;
  while (!path.empty()) {
    const auto slash = path.find('/');
    const auto part = path.substr(0, slash);
    if (!part.empty()) out.push_back(part);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return out;
}

}  // namespace

Config apply_env(Config config) {
  if (auto v = env("RISKWEAVE_HOST")) config.host = *v;
  if (auto v = env("RISKWEAVE_PORT")) {
    const auto port = tabular::parse_number(*v);
    if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port))
      throw Error("InvalidConfig", "RISKWEAVE_PORT must be an integer port number");
    config.port = static_cast<int>(*port);
  }
  if (auto v = env("RISKWEAVE_STORAGE_ROOT")) config.storage_root = *v;
  if (auto v = env("RISKWEAVE_VERBAL_MAP")) config.verbal_map_path = *v;
  if (auto v = env("RISKWEAVE_TEMPLATES")) config.templates_path = *v;
  if (auto v = env("RISKWEAVE_LEXICON")) config.lexicon_path = *v;
  return config;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

// --- registry ---------------------------------------------------------------------

json entry_to_json(const Entry& e) {
  return {{"id", e.id},
          {"kind", e.kind},
          {"created_at", e.created_at},
          {"accuracy", e.accuracy ? json(*e.accuracy) : json(nullptr)},
          {"train_size", e.train_size},
          {"artifact", api::model_to_json(e.model)}};
}

Entry entry_from_json(const json& j) {
  try {
    Entry e{j.at("id").get<std::string>(),
            j.at("kind").get<std::string>(),
            j.at("created_at").get<std::string>(),
            std::nullopt,
            j.at("train_size").get<std::size_t>(),
            api::model_from_json(j.at("artifact"))};
    if (!j.at("accuracy").is_null()) e.accuracy = j.at("accuracy").get<double>();
    if (e.kind != api::kind_of(e.model)) throw Error("InvalidModel", "registry entry kind does not match its artifact");
    return e;
  } catch (const json::exception& ex) {
    throw Error("InvalidModel", std::string("malformed registry entry: ") + ex.what());
  }
}

Registry::Registry(fs::path storage_root) : dir_(std::move(storage_root) / "models") {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("StorageError", "cannot create " + dir_.string() + ": " + ec.message());
  auto map = std::make_shared<Map>();
  for (const auto& de : fs::directory_iterator(dir_)) {
    const std::string name = de.path().filename().string();
    if (name.starts_with(".") && name.ends_with(".tmp")) {
      fs::remove(de.path(), ec);  // an interrupted write; the previous version is intact
      continue;
    }
    if (de.path().extension() != ".json") continue;
    const std::string id = de.path().stem().string();
    const auto number = id_number(id);
    if (!number) continue;
    json j;
    try {
      j = json::parse(read_file(de.path()));
    } catch (const json::parse_error& ex) {
      throw Error("StorageError", "corrupt registry file " + de.path().string() + ": " + ex.what());
    }
    auto entry = std::make_shared<const Entry>(entry_from_json(j));
    if (entry->id != id) throw Error("StorageError", "registry file " + name + " holds model " + entry->id);
    map->emplace(id, std::move(entry));
    next_id_ = std::max(next_id_, *number + 1);
  }
  snapshot_ = std::move(map);
}

std::shared_ptr<const Registry::Map> Registry::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::shared_ptr<const Entry> Registry::get(std::string_view id) const {
  const auto snap = snapshot();
  const auto it = snap->find(id);
  return it == snap->end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const Entry>> Registry::list() const {
  std::vector<std::shared_ptr<const Entry>> out;
  for (const auto& [id, e] : *snapshot()) out.push_back(e);
  return out;
}

std::size_t Registry::size() const { return snapshot()->size(); }

std::shared_ptr<const Entry> Registry::add(api::Model model, std::optional<double> accuracy, std::size_t train_size) {
  std::lock_guard writer(writer_mutex_);
  const std::string kind = api::kind_of(model);
  auto entry = std::make_shared<const Entry>(
      Entry{make_id(next_id_), kind, utc_timestamp(), accuracy, train_size, std::move(model)});
  write_atomically(dir_ / (entry->id + ".json"), entry_to_json(*entry).dump() + "\n");
  ++next_id_;

  auto next = std::make_shared<Map>(*snapshot());
  next->emplace(entry->id, entry);
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
  return entry;
}

// --- feedback -----------------------------------------------------------------------

FeedbackLog::FeedbackLog(fs::path path) : path_(std::move(path)) {
  std::error_code ec;
  fs::create_directories(path_.parent_path(), ec);
  if (ec) throw Error("StorageError", "cannot create " + path_.parent_path().string() + ": " + ec.message());
}

void FeedbackLog::append(const json& entry) {
  const std::string line = entry.dump() + "\n";
  std::lock_guard lock(mutex_);
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", path_);
  try {
    write_all(fd, line, path_);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) io_error("cannot flush", path_);
}

json feedback_record(const json& body, const std::string& timestamp) {
  const auto bad = [](const std::string& detail, const std::string& field) {
    return Error("InvalidFeedback", detail, {{"field", field}});
  };
  if (!body.is_object()) throw bad("feedback must be a JSON object", "");
  for (auto it = body.begin(); it != body.end(); ++it) {
    const auto& k = it.key();
    if (k != "model_id" && k != "comment" && k != "answers" && k != "demographics" && k != "schema_version")
      throw bad("unknown field '" + k + "'", k);
  }
  if (!body.contains("model_id") || !body.at("model_id").is_string()) throw bad("model_id must be a string", "model_id");
  if (body.contains("comment") && !body.at("comment").is_string()) throw bad("comment must be a string", "comment");
  if (body.contains("demographics") && !body.at("demographics").is_object())
    throw bad("demographics must be an object", "demographics");
  if (body.contains("schema_version") && body.at("schema_version") != kFeedbackSchemaVersion)
    throw bad("unsupported feedback schema_version", "schema_version");
  if (!body.contains("answers") || !body.at("answers").is_object()) throw bad("answers must be an object", "answers");
  const auto& answers = body.at("answers");
  const auto rating = answers.find("understandability");
  if (rating == answers.end() || !rating->is_number_integer() || rating->get<long long>() < 1 ||
      rating->get<long long>() > 5)
    throw bad("answers.understandability must be an integer from 1 to 5", "answers.understandability");
  if (answers.contains("comprehension") && !answers.at("comprehension").is_object())
    throw bad("answers.comprehension must be an object", "answers.comprehension");

  return {{"timestamp", timestamp},
          {"schema_version", kFeedbackSchemaVersion},
          {"model_id", body.at("model_id")},
          {"comment", body.value("comment", "")},
          {"answers", answers},
          {"demographics", body.value("demographics", json::object())}};
}

// --- routing ------------------------------------------------------------------------

int status_for(std::string_view code) {
  if (code == "UnknownModel" || code == "NotFound") return 404;
  if (code == "MethodNotAllowed") return 405;
  if (code == "UnknownLabel" || code == "CycleOutOfRange" || code == "NotConverged") return 422;
  if (code == "StorageError" || code == "InternalError") return 500;
  return 400;
}

Service::Service(Config config)
    : config_(std::move(config)),
      resources_(api::Resources::load(config_.verbal_map_path, config_.templates_path, config_.lexicon_path)),
      registry_(config_.storage_root),
      feedback_(config_.storage_root / "feedback.jsonl") {}

std::shared_ptr<const Entry> Service::require_model(std::string_view id) const {
  auto e = registry_.get(id);
  if (!e) throw Error("UnknownModel", "no model with id '" + std::string(id) + "'", {{"model_id", std::string(id)}});
  return e;
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    json parsed = json::object();
    if (method == "POST") {
      try {
        parsed = body.empty() ? json::object() : json::parse(body);
      } catch (const json::parse_error& e) {
        throw Error("InvalidJson", std::string("request body is not valid JSON: ") + e.what());
      }
    }
    return route(method, path, parsed);
  } catch (const Error& e) {
    return {status_for(e.code()), api::error_body(e)};
  } catch (const std::exception& e) {
    return {500, api::error_body(Error("InternalError", e.what()))};
  }
}

Response Service::route(std::string_view method, std::string_view path, const json& body) {
  const auto parts = segments(path.substr(0, path.find('?')));
  const auto n = parts.size();
  const auto expect = [&](std::string_view m) {
    if (method != m)
      throw Error("MethodNotAllowed", std::string(method) + " is not supported on " + std::string(path),
                  {{"allowed", std::string(m)}});
  };
  const auto tree_of = [](const Entry& e) -> const cart::DecisionTree& {
    if (const auto* t = std::get_if<cart::DecisionTree>(&e.model)) return *t;
    throw Error("WrongModelKind", "model '" + e.id + "' is a cycle model", {{"model_id", e.id}, {"kind", e.kind}});
  };

  if (n == 1 && parts[0] == "health") {
    expect("GET");
    return {200, {{"status", "ok"}, {"models", registry_.size()}}};
  }

  if (n == 1 && parts[0] == "models") {
    if (method == "GET") {
      json list = json::array();
      for (const auto& e : registry_.list())
        list.push_back({{"id", e->id},
                        {"kind", e->kind},
                        {"created_at", e->created_at},
                        {"accuracy", e->accuracy ? json(*e->accuracy) : json(nullptr)},
                        {"train_size", e->train_size}});
      return {200, {{"models", std::move(list)}}};
    }
    expect("POST");
    const auto result = api::train(api::train_request_from_json(body));
    const auto entry = registry_.add(result.tree, result.tree.test_accuracy, result.tree.train_size);
    json out = api::train_summary(result);
    out["model_id"] = entry->id;
    return {201, out};
  }

  if (n == 1 && parts[0] == "cycles") {
    expect("POST");
    const auto result = api::train_cycles(api::cycles_request_from_json(body));
    const auto entry = registry_.add(result.model, std::nullopt, result.train_patients);
    json out = api::train_summary(result);
    out["model_id"] = entry->id;
    return {201, out};
  }

  if (n == 2 && parts[0] == "models") {
    expect("GET");
    const auto e = require_model(parts[1]);
    json out = {{"id", e->id},
                {"kind", e->kind},
                {"created_at", e->created_at},
                {"accuracy", e->accuracy ? json(*e->accuracy) : json(nullptr)},
                {"train_size", e->train_size},
                {"schema", tabular::schema_to_json(api::schema_of(e->model))}};
    if (const auto* t = std::get_if<cart::DecisionTree>(&e->model)) out["summary"] = api::summary(*t, resources_);
    else out["max_cycles"] = std::get<cycles::CycleModel>(e->model).max_cycles();
    return {200, out};
  }

  if (n == 3 && parts[0] == "models") {
    expect("POST");
    const auto e = require_model(parts[1]);
    const auto action = parts[2];
    if (action == "coverage") {
      const auto& asserted = body.contains("asserted") ? body.at("asserted") : json::array();
      if (!asserted.is_array()) throw Error("InvalidRequest", "field 'asserted' must be an array of strings");
      std::vector<std::string> items;
      for (const auto& a : asserted) {
        if (!a.is_string()) throw Error("InvalidRequest", "field 'asserted' must be an array of strings");
        items.push_back(a.get<std::string>());
      }
      return {200, api::coverage(api::schema_of(e->model), items, resources_)};
    }
    if (action == "predict" || action == "explain" || action == "whatif") {
      const auto& tree = tree_of(*e);
      const auto x = api::features_field(tree.schema, body);
      json out;
      if (action == "predict") out = api::predict(tree, x, resources_);
      else if (action == "explain") out = api::explain(tree, x, resources_);
      else {
        if (!body.contains("target_label") || !body.at("target_label").is_string())
          throw Error("InvalidRequest", "field 'target_label' must be a class name", {{"field", "target_label"}});
        out = api::what_if(tree, x, body.at("target_label").get<std::string>());
      }
      out["model_id"] = e->id;
      return {200, out};
    }
  }

  if (n == 3 && parts[0] == "cycles" && parts[2] == "predict") {
    expect("POST");
    const auto e = require_model(parts[1]);
    const auto* model = std::get_if<cycles::CycleModel>(&e->model);
    if (!model) throw Error("WrongModelKind", "model '" + e->id + "' is a tree", {{"model_id", e->id}, {"kind", e->kind}});
    const auto x = api::features_field(model->schema, body);
    std::size_t n_cycles = model->max_cycles();
    if (body.contains("n_cycles")) {
      const auto& v = body.at("n_cycles");
      if (!v.is_number_integer()) throw Error("InvalidRequest", "field 'n_cycles' must be an integer");
      const auto k = v.get<long long>();
      if (k < 1 || static_cast<std::size_t>(k) > model->max_cycles())
        throw Error("CycleOutOfRange", "n_cycles must lie in 1.." + std::to_string(model->max_cycles()),
                    {{"cycle", k}, {"max_cycles", model->max_cycles()}});
      n_cycles = static_cast<std::size_t>(k);
    }
    json out = api::cycles_predict(*model, x, n_cycles, resources_);
    out["model_id"] = e->id;
    return {200, out};
  }

  if (n == 1 && parts[0] == "feedback") {
    expect("POST");
    json record = feedback_record(body, utc_timestamp());
    require_model(record.at("model_id").get<std::string>());
    feedback_.append(record);
    return {201, {{"status", "recorded"}, {"timestamp", record.at("timestamp")}}};
  }

  throw Error("NotFound", "no route for " + std::string(path), {{"path", std::string(path)}});
}

void Service::serve(const std::function<void(int)>& on_listening) {
  httplib::Server server;
  server.new_task_queue = [threads = config_.threads] { return new httplib::ThreadPool(threads); };
  const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);

  int port = config_.port;
  if (port == 0) {
    port = server.bind_to_any_port(config_.host);
    if (port < 0) throw Error("BindFailed", "cannot bind " + config_.host);
  } else if (!server.bind_to_port(config_.host, port)) {
    throw Error("BindFailed", "cannot bind " + config_.host + ":" + std::to_string(port));
  }
  server_.store(&server);
  if (!stop_requested_.load()) {
    if (on_listening) on_listening(port);
    server.listen_after_bind();
  }
  server_.store(nullptr);
}

void Service::stop() {
  stop_requested_.store(true);
  if (auto* s = static_cast<httplib::Server*>(server_.load())) s->stop();
}

}  // namespace riskweave::service
