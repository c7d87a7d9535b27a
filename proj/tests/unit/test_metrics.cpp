#include <doctest.h>

#include <cmath>

#include "riskweave/error.hpp"
#include "riskweave/metrics.hpp"
#include "riskweave/rng.hpp"

using namespace riskweave;
using namespace riskweave::metrics;

TEST_CASE("confusion matrix rates") {
  const ConfusionMatrix m{30, 10, 50, 10};
  CHECK(accuracy(m) == 0.8);
  CHECK(recall(m) == 0.75);
  CHECK(false_negative_rate(m) == 0.25);
  CHECK(false_omission_rate(m) == doctest::Approx(10.0 / 60.0));
  const ConfusionMatrix no_positives{0, 0, 5, 0};
  CHECK_THROWS_WITH_AS(recall(no_positives), doctest::Contains("UndefinedMetric"), Error);
  const auto j = to_json(no_positives);
  CHECK(j.at("recall").is_null());
  CHECK(j.at("accuracy") == 1.0);
}

TEST_CASE("evaluate counts against the positive class") {
  const auto s = tabular::synthesize_chd_like(2, 1000);
  const auto tree = cart::train(s.data);
  const auto m = evaluate(tree, s.data);
  CHECK(m.total() == 1000);
  std::size_t correct = 0;
  for (const auto& r : s.data.rows) correct += cart::predict(tree, r.values).label == r.label;
  CHECK(m.tp + m.tn == correct);
  tabular::Dataset other = s.data;
  other.schema = tabular::ivf_schema();
  CHECK_THROWS_AS(evaluate(tree, other), Error);
}

TEST_CASE("reliability bins") {
  const std::vector<ScoredPrediction> scored = {{0.5, true}, {0.55, false}, {0.74, true}, {1.0, true}, {0.95, false}};
  const auto d = reliability(scored, 5);
  REQUIRE(d.bins.size() == 5);
  CHECK(d.bins[0].lo == 0.5);
  CHECK(d.bins[4].hi == 1.0);
  CHECK(d.bins[0].count == 2);
  CHECK(d.bins[0].mean_confidence == doctest::Approx(0.525));
  CHECK(d.bins[0].observed_accuracy == 0.5);
  CHECK(d.bins[2].count == 1);
  CHECK(d.bins[1].count == 0);
  CHECK(d.bins[1].mean_confidence == 0.0);
  CHECK(d.bins[4].count == 2);
  CHECK(d.bins[4].observed_accuracy == 0.5);
  CHECK(to_csv(d).starts_with("bin_lo,bin_hi,mean_confidence,observed_accuracy,count\n0.5,0.6,0.525,0.5,2\n"));
  CHECK_THROWS_AS(reliability(scored, 1), Error);
  CHECK_THROWS_AS(reliability({}, 10), Error);
  CHECK_THROWS_AS(reliability(std::vector<ScoredPrediction>{{0.4, true}}, 10), Error);
}

TEST_CASE("a calibrated scorer lands on the diagonal") {
  SplitMix64 rng(5);
  std::vector<ScoredPrediction> scored;
  for (int i = 0; i < 10000; ++i) {
    const double c = rng.uniform(0.5, 1.0);
    scored.push_back({c, rng.bernoulli(c)});
  }
  for (const auto& b : reliability(scored, 10).bins) {
    REQUIRE(b.count > 0);
    CHECK(std::fabs(b.observed_accuracy - b.mean_confidence) <= 0.05);
    CHECK(b.mean_confidence >= b.lo);
    CHECK(b.mean_confidence <= b.hi);
  }
}
