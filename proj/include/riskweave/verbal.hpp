#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskweave::verbal {

/// Grid of certainty phrases indexed by (model accuracy band, confidence p-value band).
///
/// Accuracy bands are lower-inclusive: band i covers [edge[i-1], edge[i]), the
/// last band ends at 1 inclusive. Confidence bands are upper-inclusive: band j
/// covers (edge[j-1], edge[j]], the first starts at 0 inclusive. Row 0 is the
/// lowest accuracy band; column 0 is the smallest p (the most certain).
class VerbalMap {
 public:
  VerbalMap(std::vector<double> accuracy_edges, std::vector<double> confidence_edges,
            std::vector<std::vector<std::string>> phrases);

  const std::vector<double>& accuracy_edges() const noexcept { return accuracy_edges_; }
  const std::vector<double>& confidence_edges() const noexcept { return confidence_edges_; }
  const std::vector<std::vector<std::string>>& phrases() const noexcept { return phrases_; }

  std::size_t accuracy_band(double accuracy) const;
  std::size_t confidence_band(double p) const;
  const std::string& phrase(std::size_t accuracy_band, std::size_t confidence_band) const;

  friend bool operator==(const VerbalMap&, const VerbalMap&) = default;

 private:
  std::vector<double> accuracy_edges_;
  std::vector<double> confidence_edges_;
  std::vector<std::vector<std::string>> phrases_;
};

/// p edges 0.01 / 0.05 / 0.33, accuracy edge 0.9; rows below 0.9 carry "possibly".
VerbalMap default_map();

std::string verbalize(const VerbalMap& map, double accuracy, double confidence_p);

inline constexpr int kVerbalMapVersion = 1;
nlohmann::json to_json(const VerbalMap& map);
VerbalMap map_from_json(const nlohmann::json& j);
VerbalMap load_map(const std::filesystem::path& path);

struct Percentage {};
struct NaturalFrequency {
  std::size_t base = 100;
};
/// Single-axis use of a map: top accuracy row, p = 1 - value.
struct Verbal {
  std::reference_wrapper<const VerbalMap> map;
};
using Style = std::variant<Percentage, NaturalFrequency, Verbal>;

/// "29%", "29 in 100 people like you", or a phrase. Rounds half-up.
std::string format_probability(double value, const Style& style);

/// floor(x + 0.5), tolerant of representation error just below the half.
long long round_half_up(double x);

}  // namespace riskweave::verbal
