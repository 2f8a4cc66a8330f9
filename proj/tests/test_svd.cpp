#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "nextgrade/rng.hpp"
#include "nextgrade/svd.hpp"
#include "nextgrade/synth.hpp"

using namespace nextgrade;

TEST_CASE("svd recovers a noiseless rank-1 positive matrix") {
  Rng rng(5);
  std::vector<double> a(30), b(20);
  for (double& x : a) x = rng.uniform(1.2, 2.0);
  for (double& x : b) x = rng.uniform(0.8, 1.6);
  std::vector<GradedDyad> train;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 20; ++j) {
      if (rng.uniform() < 0.6) {
        train.push_back({"s" + std::to_string(i), "c" + std::to_string(j), a[i] * b[j]});
      }
    }
  }
  SvdConfig cfg;
  cfg.rank = 1;
  const SvdModel m = svd_fit(train, cfg, 99);
  double sq = 0.0;
  for (const auto& d : train) {
    sq += std::pow(*svd_predict(m, d.sid, d.cid) - d.grade, 2);
  }
  CHECK(std::sqrt(sq / train.size()) < 0.05);
}

TEST_CASE("svd training fit beats the global mean on structured data") {
  SynthConfig sc;
  sc.seed = 12;
  sc.n_students = 150;
  sc.n_courses = 30;
  sc.n_terms = 4;
  sc.interaction_std = 0.3;
  auto synth = generate_synthetic(sc);
  std::vector<GradedDyad> train;
  double mean = 0.0;
  for (const auto& r : synth.transcript.records) {
    train.push_back({r.sid, r.cid, *r.grade});
    mean += *r.grade;
  }
  mean /= static_cast<double>(train.size());
  SvdConfig cfg;  // rank 8 default
  const SvdModel m = svd_fit(train, cfg, 3);
  double sq_svd = 0.0, sq_gm = 0.0;
  for (const auto& d : train) {
    sq_svd += std::pow(*svd_predict(m, d.sid, d.cid) - d.grade, 2);
    sq_gm += std::pow(mean - d.grade, 2);
  }
  CHECK(sq_svd < sq_gm);
}

TEST_CASE("svd prediction is the factor dot product; unseen ids are absent") {
  SvdModel m;
  m.rank = 2;
  m.student_index = {{"s1", 0}};
  m.course_index = {{"c1", 0}};
  m.student_factors = {1.0, 0.0};
  m.course_factors = {3.0, 5.0};
  m.student_courses = {{0}};
  CHECK(*svd_predict(m, "s1", "c1") == doctest::Approx(3.0));
  CHECK_FALSE(svd_predict(m, "s1", "c-unseen").has_value());
  CHECK_FALSE(svd_predict(m, "s-unseen", "c1").has_value());
  m.student_factors = {0.0, 0.0};
  CHECK(*svd_predict(m, "s1", "c1") == doctest::Approx(0.0));
}

TEST_CASE("svd rejects bad configs and empty input") {
  SvdConfig bad;
  bad.rank = 0;
  CHECK_THROWS_AS(svd_fit({{"s", "c", 3.0}}, bad, 1), std::invalid_argument);
  SvdConfig ok;
  CHECK_THROWS_AS(svd_fit({}, ok, 1), std::invalid_argument);
}

TEST_CASE("svd determinism under a fixed seed") {
  std::vector<GradedDyad> train;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    train.push_back({"s" + std::to_string(i % 10), "c" + std::to_string(i % 7),
                     rng.uniform(1.0, 4.0)});
  }
  SvdConfig cfg;
  const SvdModel a = svd_fit(train, cfg, 31);
  const SvdModel b = svd_fit(train, cfg, 31);
  CHECK(a.student_factors == b.student_factors);
  CHECK(a.course_factors == b.course_factors);
}

TEST_CASE("svdknn: neighbor choice in latent course space") {
  SvdModel m;
  m.rank = 2;
  m.student_index = {{"s1", 0}, {"s2", 1}};
  m.course_index = {{"c0", 0}, {"c1", 1}, {"c2", 2}};
  m.student_factors = {1.0, 1.0, 2.0, 0.0};
  // c0 along (1,0), c1 along (0.9, 0.1) (closest to c0), c2 along (0,1)
  m.course_factors = {1.0, 0.0, 0.9, 0.1, 0.0, 1.0};
  m.student_courses = {{1}, {}};  // s1 completed only c1; s2 nothing

  SUBCASE("single candidate: prediction equals the prediction for that course") {
    CHECK(*svdknn_predict(m, "s1", "c0") == doctest::Approx(*svd_predict(m, "s1", "c1")));
  }
  SUBCASE("target among taken courses wins via self-similarity") {
    m.student_courses[0] = {2, 1, 0};
    CHECK(*svdknn_predict(m, "s1", "c1") == doctest::Approx(*svd_predict(m, "s1", "c1")));
  }
  SUBCASE("student with no training courses falls back to the plain prediction") {
    CHECK(*svdknn_predict(m, "s2", "c0") == doctest::Approx(*svd_predict(m, "s2", "c0")));
  }
  SUBCASE("unseen student stays absent") {
    CHECK_FALSE(svdknn_predict(m, "s-unseen", "c0").has_value());
  }
  SUBCASE("unseen course falls back to the plain (absent) prediction") {
    CHECK_FALSE(svdknn_predict(m, "s1", "c-unseen").has_value());
  }
  SUBCASE("most similar course is chosen among several") {
    m.student_courses[0] = {1, 2};
    // target c0: cos(c0,c1)=0.994 > cos(c0,c2)=0 -> neighbor c1
    CHECK(*svdknn_predict(m, "s1", "c0") == doctest::Approx(*svd_predict(m, "s1", "c1")));
  }
}
