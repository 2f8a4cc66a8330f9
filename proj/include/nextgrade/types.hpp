#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nextgrade {

enum class Season { Spring = 0, Summer = 1, Fall = 2 };

const char* season_name(Season s);

// One academic term. `index` is the chronological term number within the
// dataset (0 = first observed term) and must be consistent with (year, season)
// under the ordering Spring < Summer < Fall within a year.
struct TermId {
  int index = 0;
  Season season = Season::Fall;
  int year = 0;

  friend bool operator==(const TermId&, const TermId&) = default;
};

// Maps a term index to the default calendar used when a dataset carries no
// explicit season/year columns: index 0 = Fall 2009, 1 = Spring 2010,
// 2 = Summer 2010, 3 = Fall 2010, ...
TermId term_from_index(int index);

// Grade-points scale. Values produced from letter grades lie on the
// 1/3-step two-decimal grid {0, 0.67, 1.00, 1.33, ..., 3.67, 4.00}.
constexpr double kGradeMin = 0.0;
constexpr double kGradeMax = 4.0;

const std::vector<double>& grade_grid();
const std::vector<std::string>& grade_letters();

// Letter -> grid value. Throws std::invalid_argument naming the offending
// token for anything outside the letter table.
double grade_from_letter(const std::string& letter);

// Grid value -> letter; inverse of grade_from_letter on the grid.
std::string letter_from_grade(double points);

bool is_on_grade_grid(double points);

// Nearest grid value after clipping to [0, 4]; ties resolve downward.
double snap_to_grade_grid(double raw);

enum class ColdStartClass { NCS = 0, CSS = 1, CSC = 2, CSB = 3 };

const char* cold_start_name(ColdStartClass c);

// One (student, course, term) dyad with raw attributes. String attributes use
// the empty string for "absent"; numeric attributes use std::nullopt.
struct TranscriptRecord {
  std::string sid;
  std::string cid;
  std::string iid;  // instructor, or empty when unknown
  TermId term;
  std::optional<double> grade;  // absent for prediction-only rows

  // student attributes
  std::string major;
  std::string race;
  std::string sex;
  std::optional<double> age;
  std::string zip;
  std::optional<double> sat;
  std::string hs;
  std::optional<double> hsgpa;
  std::optional<TermId> cohort;  // admit term; first observed term when absent
  bool transfer = false;

  // course attributes
  std::string cdisc;
  std::optional<double> chrs;
  std::optional<int> clevel;

  // instructor attributes (absent for transfer-credit rows)
  std::string iclass;
  std::string irank;
  std::string itenure;

  // institution of origin for transfer-credit rows
  std::string institution_id;

  // values for dataset-specific extra categorical columns, aligned with
  // Transcript::extra_feature_names
  std::vector<std::string> extra;

  // Instructor-bias identifier: the institution of origin substitutes for the
  // instructor ID on transfer-credit rows.
  const std::string& effective_iid() const {
    return iid.empty() ? institution_id : iid;
  }
};

// Per-row features derived from transcript history. Every "lterm" feature is
// computed strictly from terms before the row's own term; enrollment counts
// (term_chrs, num_enrolled, total_enrolled) are schedule data and may include
// the row's own term.
struct DerivedFeatures {
  std::optional<double> lterm_gpa;
  std::optional<double> lterm_cum_gpa;
  std::optional<double> lterm_cgpa;
  std::optional<double> lterm_cum_cgpa;
  double term_chrs = 0.0;
  double total_chrs = 0.0;
  double num_enrolled = 0.0;
  double total_enrolled = 0.0;
  int alevel = 0;
  int sterm = 0;
  int cohort_index = 0;
};

// A transcript dataset: immutable record rows plus the names of any extra
// categorical columns carried by the source file.
struct Transcript {
  std::vector<TranscriptRecord> records;
  std::vector<std::string> extra_feature_names;

  int max_term_index() const {
    int m = -1;
    for (const auto& r : records) m = std::max(m, r.term.index);
    return m;
  }
};

}  // namespace nextgrade
