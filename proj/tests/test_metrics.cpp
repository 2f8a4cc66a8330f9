#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "helpers.hpp"
#include "nextgrade/metrics.hpp"
#include "nextgrade/rng.hpp"

using namespace nextgrade;

TEST_CASE("metric examples") {
  Metrics m = compute_metrics({{3.0, 3.0}, {2.0, 2.0}});
  CHECK(m.rmse == doctest::Approx(0.0));
  CHECK(m.mae == doctest::Approx(0.0));
  CHECK(m.mae_std == doctest::Approx(0.0));

  m = compute_metrics({{4.0, 2.0}});
  CHECK(m.rmse == doctest::Approx(2.0));
  CHECK(m.mae == doctest::Approx(2.0));
  CHECK(m.mae_std == doctest::Approx(0.0));

  CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);
}

TEST_CASE("metrics agree with an independent second implementation to 1e-12") {
  Rng rng(404);
  std::vector<PredictionPair> pairs;
  std::vector<std::pair<double, double>> raw;
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(0.0, 4.0);
    const double p = rng.uniform(0.0, 4.0);
    pairs.push_back({t, p});
    raw.push_back({t, p});
  }
  const Metrics m = compute_metrics(pairs);
  const auto oracle = testutil::oracle_metrics(raw);
  CHECK(std::abs(m.rmse - oracle.rmse) < 1e-12);
  CHECK(std::abs(m.mae - oracle.mae) < 1e-12);
  CHECK(std::abs(m.mae_std - oracle.mae_std) < 1e-12);
}

TEST_CASE("clip_prediction bounds to [0, 4] and rejects non-finite input") {
  CHECK(clip_prediction(4.7) == doctest::Approx(4.0));
  CHECK(clip_prediction(-0.3) == doctest::Approx(0.0));
  CHECK(clip_prediction(2.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(clip_prediction(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(clip_prediction(INFINITY), std::invalid_argument);
}

TEST_CASE("clipping never increases absolute error against a grade in [0,4]") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double truth = rng.uniform(0.0, 4.0);
    const double raw = rng.normal(2.0, 3.0);
    CHECK(std::abs(clip_prediction(raw) - truth) <= std::abs(raw - truth) + 1e-15);
  }
}
