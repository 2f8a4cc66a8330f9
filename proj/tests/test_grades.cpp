#include <doctest.h>

#include <stdexcept>

#include "nextgrade/types.hpp"

using namespace nextgrade;

TEST_CASE("letter grades map to the two-decimal grid") {
  CHECK(grade_from_letter("A") == doctest::Approx(4.0));
  CHECK(grade_from_letter("F") == doctest::Approx(0.0));
  CHECK(grade_from_letter("B+") == doctest::Approx(3.33));
  CHECK(grade_from_letter("A-") == doctest::Approx(3.67));
  CHECK(grade_from_letter("D-") == doctest::Approx(0.67));
  CHECK_THROWS_WITH_AS(grade_from_letter("W"), doctest::Contains("'W'"), std::invalid_argument);
  CHECK_THROWS_AS(grade_from_letter("Q+"), std::invalid_argument);
}

TEST_CASE("grid closure: letter -> points -> letter is the identity") {
  for (const auto& letter : grade_letters()) {
    CHECK(letter_from_grade(grade_from_letter(letter)) == letter);
  }
  for (double v : grade_grid()) {
    CHECK(is_on_grade_grid(v));
    CHECK(grade_from_letter(letter_from_grade(v)) == doctest::Approx(v));
  }
}

TEST_CASE("snap_to_grade_grid clips then rounds to the nearest grid value") {
  CHECK(snap_to_grade_grid(4.7) == doctest::Approx(4.0));
  CHECK(snap_to_grade_grid(-0.2) == doctest::Approx(0.0));
  CHECK(snap_to_grade_grid(3.0) == doctest::Approx(3.0));
  CHECK(snap_to_grade_grid(3.2) == doctest::Approx(3.33));
  CHECK(snap_to_grade_grid(3.1) == doctest::Approx(3.0));
  CHECK(snap_to_grade_grid(0.2) == doctest::Approx(0.0));
  CHECK(snap_to_grade_grid(0.5) == doctest::Approx(0.67));
}

TEST_CASE("term calendar ordering: index increases with (year, season)") {
  auto key = [](const TermId& t) {
    return t.year * 3 + static_cast<int>(t.season);
  };
  for (int i = 1; i < 30; ++i) {
    CHECK(key(term_from_index(i)) > key(term_from_index(i - 1)));
  }
  CHECK(term_from_index(0).season == Season::Fall);
  CHECK(term_from_index(0).year == 2009);
  CHECK(term_from_index(1).season == Season::Spring);
  CHECK(term_from_index(1).year == 2010);
}
