#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace riskweave {

/// Domain error carrying a stable machine-readable code ("ValueOutOfDomain",
/// "UnknownLabel", ...) plus structured context such as row/column.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail, nlohmann::json context = nlohmann::json::object())
      : std::runtime_error(code + ": " + detail),
        code_(std::move(code)),
        detail_(detail),
        context_(std::move(context)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const nlohmann::json& context() const noexcept { return context_; }

 private:
  std::string code_;
  std::string detail_;
  nlohmann::json context_;
};

}  // namespace riskweave
