#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "nextgrade/encoder.hpp"
#include "nextgrade/synth.hpp"
#include "nextgrade/transcript.hpp"

using namespace nextgrade;
using testutil::make_record;

namespace {

struct Fixture {
  Transcript t;
  std::vector<DerivedFeatures> derived;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  explicit Fixture(int n_train = 6) {
    for (int i = 0; i < n_train; ++i) {
      auto r = make_record("s" + std::to_string(i % 3), "c" + std::to_string(i % 2), 0,
                           2.0 + 0.33 * (i % 4));
      r.age = 18.0 + i;
      t.records.push_back(r);
    }
    auto q = make_record("s0", "c1", 1, 3.0);
    q.age = 30.0;
    t.records.push_back(q);
    derived = derive_features(t, 1);
    for (std::size_t i = 0; i + 1 < t.records.size(); ++i) train.push_back(i);
    test.push_back(t.records.size() - 1);
  }
};

const Block* find_block(const DesignMatrix& m, const std::string& feature) {
  for (const auto& b : m.blocks) {
    if (b.feature == feature) return &b;
  }
  return nullptr;
}

double entry_at(const DesignMatrix& m, std::size_t row, int col) {
  for (std::size_t k = m.row_ptr[row]; k < m.row_ptr[row + 1]; ++k) {
    if (m.col[k] == col) return m.val[k];
  }
  return 0.0;
}

}  // namespace

TEST_CASE("real statistics: median, mean, population std") {
  Transcript t;
  for (double v : {1.0, 2.0, 100.0}) {
    auto r = make_record("s1", "c1", 0, 3.0);
    r.sat = v;
    r.cid = "c" + std::to_string(static_cast<int>(v));
    t.records.push_back(r);
  }
  auto derived = derive_features(t, 0);
  auto enc = fit_encoder(t, {0, 1, 2}, derived, default_feature_specs({}));
  const auto& st = enc.reals.at("sat");
  CHECK(st.median == doctest::Approx(2.0));
  CHECK(st.mean == doctest::Approx(34.0 + 1.0 / 3.0));
  const double mu = st.mean;
  const double expect_std =
      std::sqrt(((1 - mu) * (1 - mu) + (2 - mu) * (2 - mu) + (100 - mu) * (100 - mu)) / 3.0);
  CHECK(st.stddev == doctest::Approx(expect_std));
}

TEST_CASE("categorical features get one column per seen value") {
  Fixture f;
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  CHECK(enc.categories.at("sid").values.size() == 3);
  CHECK(enc.categories.at("cid").values.size() == 2);
  auto m = encode(f.t, f.train, f.derived, enc, Policy::Fm);
  const Block* sid = find_block(m, "sid");
  REQUIRE(sid != nullptr);
  CHECK(sid->width == 3);
}

TEST_CASE("fit_encoder rejects an empty training set") {
  Fixture f;
  CHECK_THROWS_AS(fit_encoder(f.t, {}, f.derived, default_feature_specs({})), std::invalid_argument);
}

TEST_CASE("all-absent real features get median 0 and a warning") {
  Fixture f;
  for (auto& r : f.t.records) r.sat.reset();
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  CHECK(enc.reals.at("sat").median == doctest::Approx(0.0));
  CHECK(enc.reals.at("sat").dead());
  bool warned = false;
  for (const auto& w : enc.warnings) warned = warned || w.find("sat") != std::string::npos;
  CHECK(warned);
  // downstream models accept the column: it encodes to zero everywhere
  auto dense = encode(f.t, f.train, f.derived, enc, Policy::Dense);
  const Block* sat = find_block(dense, "sat");
  REQUIRE(sat != nullptr);
  for (std::size_t i = 0; i < dense.rows(); ++i) CHECK(entry_at(dense, i, sat->start) == 0.0);
}

TEST_CASE("absent reals: imputed+scaled under the dense policy, no entry under FM") {
  Fixture f;
  f.t.records[2].age.reset();
  f.derived = derive_features(f.t, 1);
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  const auto& st = enc.reals.at("age");
  CHECK(st.n_present == f.train.size() - 1);

  auto dense = encode(f.t, f.train, f.derived, enc, Policy::Dense);
  const Block* age_d = find_block(dense, "age");
  REQUIRE(age_d != nullptr);
  CHECK(entry_at(dense, 2, age_d->start) == doctest::Approx(st.z(st.median)));

  auto fm = encode(f.t, f.train, f.derived, enc, Policy::Fm);
  const Block* age_f = find_block(fm, "age");
  REQUIRE(age_f != nullptr);
  bool has_entry = false;
  for (std::size_t k = fm.row_ptr[2]; k < fm.row_ptr[3]; ++k) {
    has_entry = has_entry || fm.col[k] == age_f->start;
  }
  CHECK_FALSE(has_entry);
}

TEST_CASE("unseen categories map to a zero block") {
  Fixture f;
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  // the test row's cid c1 is seen, but give it an unseen course
  f.t.records[f.test[0]].cid = "c999";
  auto m = encode(f.t, f.test, f.derived, enc, Policy::Fm);
  const Block* cid = find_block(m, "cid");
  REQUIRE(cid != nullptr);
  double sum = 0.0;
  for (int c = cid->start; c < cid->start + cid->width; ++c) sum += entry_at(m, 0, c);
  CHECK(sum == 0.0);
}

TEST_CASE("encoding is a pure function of the fitted state") {
  Fixture f;
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  auto a = encode(f.t, f.train, f.derived, enc, Policy::Fm);
  auto b = encode(f.t, f.train, f.derived, enc, Policy::Fm);
  CHECK(a.col == b.col);
  CHECK(a.val == b.val);
  CHECK(a.row_ptr == b.row_ptr);
}

TEST_CASE("Z-scored training columns have mean 0 and std 1") {
  SynthConfig cfg;
  cfg.seed = 2;
  cfg.n_students = 120;
  cfg.n_courses = 30;
  cfg.n_terms = 4;
  auto synth = generate_synthetic(cfg);
  auto derived = derive_features(synth.transcript, 3);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < synth.transcript.records.size(); ++i) {
    if (synth.transcript.records[i].term.index < 3) train.push_back(i);
  }
  auto enc = fit_encoder(synth.transcript, train, derived, default_feature_specs({}));
  auto dense = encode(synth.transcript, train, derived, enc, Policy::Dense);
  for (const auto& b : dense.blocks) {
    if (b.treatment != Treatment::Real) continue;
    const auto& st = enc.reals.at(b.feature);
    if (st.dead()) continue;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < dense.rows(); ++i) {
      const double v = entry_at(dense, i, b.start);
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(dense.rows());
    const double mean = sum / n;
    // columns with absent values are imputed at the median, which shifts the
    // mean; columns fully present must be exactly standardized
    if (st.n_present == dense.rows()) {
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(std::sqrt(sq / n - mean * mean) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("one-hot blocks carry at most one active entry per row") {
  Fixture f;
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  auto m = encode(f.t, f.test, f.derived, enc, Policy::Fm);
  for (const auto& b : m.blocks) {
    if (b.treatment != Treatment::OneHot) continue;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double sum = 0.0;
      for (int c = b.start; c < b.start + b.width; ++c) sum += entry_at(m, i, c);
      CHECK((sum == 0.0 || sum == 1.0));
    }
  }
}

TEST_CASE("leakage: the fitted state ignores rows outside the training slice") {
  Fixture f;
  auto enc1 = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));
  Transcript mutated = f.t;
  mutated.records[f.test[0]].grade = 0.0;
  mutated.records[f.test[0]].sat = 9999.0;
  auto derived2 = derive_features(mutated, 1);
  auto enc2 = fit_encoder(mutated, f.train, derived2, default_feature_specs({}));
  CHECK(enc1.reals.at("sat").mean == enc2.reals.at("sat").mean);
  CHECK(enc1.categories.at("sid").values == enc2.categories.at("sid").values);
  auto m1 = encode(f.t, f.train, f.derived, enc1, Policy::Fm);
  auto m2 = encode(mutated, f.train, derived2, enc2, Policy::Fm);
  CHECK(m1.col == m2.col);
  CHECK(m1.val == m2.val);
}

TEST_CASE("select_features restricts and recompacts the layouts") {
  Fixture f;
  auto enc = fit_encoder(f.t, f.train, f.derived, default_feature_specs({}));

  SUBCASE("keeping everything reproduces the matrix up to column permutation") {
    std::set<std::string> all;
    for (const auto& s : enc.specs) all.insert(s.name);
    auto enc2 = select_features(enc, all);
    auto a = encode(f.t, f.train, f.derived, enc, Policy::Fm);
    auto b = encode(f.t, f.train, f.derived, enc2, Policy::Fm);
    CHECK(a.columns == b.columns);
    CHECK(a.col.size() == b.col.size());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      // same per-feature values regardless of column order
      std::map<std::string, double> va, vb;
      for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
        va[a.feature_of_column(a.col[k])] += a.val[k];
      }
      for (std::size_t k = b.row_ptr[i]; k < b.row_ptr[i + 1]; ++k) {
        vb[b.feature_of_column(b.col[k])] += b.val[k];
      }
      CHECK(va == vb);
    }
  }

  SUBCASE("keeping sid/cid reduces to the pure interaction form") {
    auto enc2 = select_features(enc, {"sid", "cid"});
    auto m = encode(f.t, f.train, f.derived, enc2, Policy::Fm);
    CHECK(m.blocks.size() == 2);
    CHECK(m.columns == 5);  // 3 students + 2 courses
    for (std::size_t i = 0; i < m.rows(); ++i) CHECK(m.row_nnz(i) == 2);
  }

  SUBCASE("empty or unknown keep sets are rejected") {
    CHECK_THROWS_AS(select_features(enc, {}), std::invalid_argument);
    CHECK_THROWS_AS(select_features(enc, {"nonexistent"}), std::invalid_argument);
  }
}

TEST_CASE("feature policy JSON overrides treatments") {
  auto specs = default_feature_specs({});
  apply_feature_policy_json(specs,
                            R"({"features":[{"name":"age","fm":"skip","dense":"skip"}]})");
  for (const auto& s : specs) {
    if (s.name == "age") {
      CHECK(s.fm == Treatment::Skip);
      CHECK(s.dense == Treatment::Skip);
    }
  }
  CHECK_THROWS_AS(apply_feature_policy_json(specs, R"({"features":[{"name":"nope","fm":"real"}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_feature_policy_json(specs, R"({"features":[{"name":"age","fm":"bogus"}]})"),
                  std::invalid_argument);
}
