#include "riskweave/verbal.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "riskweave/error.hpp"

namespace riskweave::verbal {

namespace {

[[noreturn]] void invalid_map(const std::string& detail) { throw Error("InvalidMap", detail); }

void check_edges(const std::vector<double>& edges, const char* axis) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!(edges[i] > 0.0 && edges[i] < 1.0)) invalid_map(std::string(axis) + " edges must lie strictly inside (0, 1)");
    if (i > 0 && !(edges[i] > edges[i - 1])) invalid_map(std::string(axis) + " edges must be strictly increasing");
  }
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw Error("InvalidArgument", std::string(what) + " must lie in [0, 1]", {{std::string(what), v}});
}

}  // namespace

VerbalMap::VerbalMap(std::vector<double> accuracy_edges, std::vector<double> confidence_edges,
                     std::vector<std::vector<std::string>> phrases)
    : accuracy_edges_(std::move(accuracy_edges)),
      confidence_edges_(std::move(confidence_edges)),
      phrases_(std::move(phrases)) {
  check_edges(accuracy_edges_, "accuracy");
  check_edges(confidence_edges_, "confidence");
  if (phrases_.size() != accuracy_edges_.size() + 1) invalid_map("one phrase row per accuracy band required");
  for (const auto& row : phrases_) {
    if (row.size() != confidence_edges_.size() + 1) invalid_map("one phrase per confidence band required");
    for (const auto& p : row)
      if (p.empty()) invalid_map("phrases must be non-empty");
  }
}

std::size_t VerbalMap::accuracy_band(double accuracy) const {
  check_unit(accuracy, "accuracy");
  std::size_t band = 0;
  while (band < accuracy_edges_.size() && accuracy >= accuracy_edges_[band]) ++band;
  return band;
}

std::size_t VerbalMap::confidence_band(double p) const {
  check_unit(p, "confidence_p");
  std::size_t band = 0;
  while (band < confidence_edges_.size() && p > confidence_edges_[band]) ++band;
  return band;
}

const std::string& VerbalMap::phrase(std::size_t accuracy_band, std::size_t confidence_band) const {
  return phrases_.at(accuracy_band).at(confidence_band);
}

VerbalMap default_map() {
  return VerbalMap({0.9}, {0.01, 0.05, 0.33},
                   {{"possibly virtually certain", "possibly very likely", "possibly likely", "possibly uncertain"},
                    {"virtually certain", "very likely", "likely", "uncertain"}});
}

std::string verbalize(const VerbalMap& map, double accuracy, double confidence_p) {
  return map.phrase(map.accuracy_band(accuracy), map.confidence_band(confidence_p));
}

nlohmann::json to_json(const VerbalMap& map) {
  return {{"format", "riskweave.verbal_map"},
          {"version", kVerbalMapVersion},
          {"accuracy_edges", map.accuracy_edges()},
          {"confidence_edges", map.confidence_edges()},
          {"phrases", map.phrases()}};
}

VerbalMap map_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "riskweave.verbal_map") invalid_map("not a riskweave.verbal_map document");
    if (j.at("version").get<int>() != kVerbalMapVersion)
      throw Error("UnsupportedVersion", "verbal map version " + j.at("version").dump());
    return VerbalMap(j.at("accuracy_edges").get<std::vector<double>>(),
                     j.at("confidence_edges").get<std::vector<double>>(),
                     j.at("phrases").get<std::vector<std::vector<std::string>>>());
  } catch (const nlohmann::json::exception& e) {
    invalid_map(std::string("malformed verbal map: ") + e.what());
  }
}

VerbalMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open verbal map", {{"path", path.string()}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    invalid_map(std::string("verbal map is not JSON: ") + e.what());
  }
  return map_from_json(j);
}

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5 + 1e-9)); }

std::string format_probability(double value, const Style& style) {
  if (!std::isfinite(value)) throw Error("InvalidArgument", "probability must be finite");
  check_unit(value, "probability");
  if (std::holds_alternative<Percentage>(style)) return std::to_string(round_half_up(value * 100.0)) + "%";
  if (const auto* nf = std::get_if<NaturalFrequency>(&style)) {
    if (nf->base < 1) throw Error("InvalidBase", "natural frequency base must be >= 1", {{"base", nf->base}});
    return std::to_string(round_half_up(value * static_cast<double>(nf->base))) + " in " + std::to_string(nf->base) +
           " people like you";
  }
  const VerbalMap& map = std::get<Verbal>(style).map.get();
  return map.phrase(map.accuracy_edges().size(), map.confidence_band(1.0 - value));
}

}  // namespace riskweave::verbal
