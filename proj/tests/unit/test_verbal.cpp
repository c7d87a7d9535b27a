#include <doctest.h>

#include "riskweave/error.hpp"
#include "riskweave/verbal.hpp"

using namespace riskweave;
using namespace riskweave::verbal;

TEST_CASE("default map bands") {
  const VerbalMap m = default_map();
  CHECK(verbalize(m, 0.92, 0.0) == "virtually certain");
  CHECK(verbalize(m, 0.92, 0.01) == "virtually certain");
  CHECK(verbalize(m, 0.92, 0.03) == "very likely");
  CHECK(verbalize(m, 0.92, 0.05) == "very likely");
  CHECK(verbalize(m, 0.92, 0.2) == "likely");
  CHECK(verbalize(m, 0.92, 0.5) == "uncertain");
  CHECK(verbalize(m, 0.9, 1.0) == "uncertain");
  CHECK(verbalize(m, 0.89, 0.0) == "possibly virtually certain");
  CHECK(verbalize(m, 0.0, 0.5) == "possibly uncertain");
  CHECK_THROWS_AS(verbalize(m, 1.2, 0.5), Error);
  CHECK_THROWS_AS(verbalize(m, 0.9, -0.1), Error);
}

TEST_CASE("phrases never become more certain as p grows") {
  const VerbalMap m = default_map();
  for (double acc : {0.5, 0.95}) {
    std::size_t prev = 0;
    for (double p = 0.0; p <= 1.0; p += 0.001) {
      const std::size_t band = m.confidence_band(p);
      CHECK(band >= prev);
      prev = band;
    }
    (void)acc;
  }
}

TEST_CASE("map validation and json round trip") {
  const VerbalMap m = default_map();
  CHECK(map_from_json(to_json(m)) == m);
  CHECK_THROWS_AS(VerbalMap({0.9}, {0.05, 0.01}, {{"a", "b", "c"}, {"a", "b", "c"}}), Error);
  CHECK_THROWS_AS(VerbalMap({0.9}, {0.05}, {{"a", "b"}}), Error);
  CHECK_THROWS_AS(VerbalMap({0.9}, {0.05}, {{"a", "b"}, {"a", ""}}), Error);
  CHECK_THROWS_AS(VerbalMap({1.0}, {0.05}, {{"a", "b"}, {"a", "b"}}), Error);
  auto j = to_json(m);
  j["version"] = 9;
  CHECK_THROWS_WITH_AS(map_from_json(j), doctest::Contains("UnsupportedVersion"), Error);
  CHECK_THROWS_AS(map_from_json({{"format", "riskweave.verbal_map"}, {"version", 1}}), Error);
  CHECK_THROWS_AS(load_map("/nonexistent/map.json"), Error);
}

TEST_CASE("probability formats") {
  CHECK(format_probability(0.29, Percentage{}) == "29%");
  CHECK(format_probability(0.51, Percentage{}) == "51%");
  CHECK(format_probability(0.125, Percentage{}) == "13%");
  CHECK(format_probability(0.005, Percentage{}) == "1%");
  CHECK(format_probability(0.29, NaturalFrequency{100}) == "29 in 100 people like you");
  CHECK(format_probability(0.29, NaturalFrequency{1000}) == "290 in 1000 people like you");
  CHECK_THROWS_AS(format_probability(0.29, NaturalFrequency{0}), Error);
  CHECK_THROWS_AS(format_probability(1.5, Percentage{}), Error);
  const VerbalMap m = default_map();
  CHECK(format_probability(0.999, Verbal{m}) == "virtually certain");
  CHECK(format_probability(0.5, Verbal{m}) == "uncertain");
  CHECK(round_half_up(0.5) == 1);
  CHECK(round_half_up(1.4999) == 1);
  CHECK(round_half_up(0.285 * 100) == 29);
}
