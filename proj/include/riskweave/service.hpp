#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/api.hpp"

namespace riskweave::service {

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path storage_root = "riskweave-store";
  std::string verbal_map_path;
  std::string templates_path;
  std::string lexicon_path;
  std::size_t threads = 8;
};

/// Overrides fields from RISKWEAVE_HOST, RISKWEAVE_PORT, RISKWEAVE_STORAGE_ROOT,
/// RISKWEAVE_VERBAL_MAP, RISKWEAVE_TEMPLATES and RISKWEAVE_LEXICON when set.
Config apply_env(Config config);

struct Entry {
  std::string id;
  std::string kind;  // "tree" or "cycles"
  std::string created_at;
  std::optional<double> accuracy;
  std::size_t train_size = 0;
  api::Model model;
};

nlohmann::json entry_to_json(const Entry& e);
Entry entry_from_json(const nlohmann::json& j);

/// Models persisted as storage_root/models/<id>.json. Writers are serialized
/// and publish a new immutable snapshot; readers never block on disk I/O.
class Registry {
 public:
  explicit Registry(std::filesystem::path storage_root);

  std::shared_ptr<const Entry> get(std::string_view id) const;  // nullptr if absent
  std::shared_ptr<const Entry> add(api::Model model, std::optional<double> accuracy, std::size_t train_size);
  std::vector<std::shared_ptr<const Entry>> list() const;
  std::size_t size() const;

 private:
  using Map = std::map<std::string, std::shared_ptr<const Entry>, std::less<>>;
  std::shared_ptr<const Map> snapshot() const;

  std::filesystem::path dir_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Map> snapshot_;
  std::mutex writer_mutex_;
  std::size_t next_id_ = 1;
};

/// Append-only JSON-lines log; each entry is one write(2) of a complete line.
class FeedbackLog {
 public:
  explicit FeedbackLog(std::filesystem::path path);
  void append(const nlohmann::json& entry);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

inline constexpr int kFeedbackSchemaVersion = 1;

/// Checks a feedback body and returns the record to store (timestamped, no
/// request metadata). Throws InvalidFeedback.
nlohmann::json feedback_record(const nlohmann::json& body, const std::string& timestamp);

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// HTTP status for a domain error code.
int status_for(std::string_view code);

class Service {
 public:
  explicit Service(Config config);

  /// Routes one request; never throws.
  Response handle(std::string_view method, std::string_view path, std::string_view body);

  /// Binds and serves until stop(). Calls on_listening with the bound port.
  void serve(const std::function<void(int)>& on_listening = {});
  /// Safe to call from any thread, before or during serve().
  void stop();

  const Registry& registry() const noexcept { return registry_; }

 private:
  Response route(std::string_view method, std::string_view path, const nlohmann::json& body);
  std::shared_ptr<const Entry> require_model(std::string_view id) const;

  Config config_;
  api::Resources resources_;
  Registry registry_;
  FeedbackLog feedback_;
  std::atomic<void*> server_{nullptr};
  std::atomic<bool> stop_requested_{false};
};

std::string utc_timestamp();

}  // namespace riskweave::service
