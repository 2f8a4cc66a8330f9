#include "nextgrade/transcript.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace nextgrade {

const char* season_name(Season s) {
  switch (s) {
    case Season::Spring: return "Spring";
    case Season::Summer: return "Summer";
    case Season::Fall: return "Fall";
  }
  return "?";
}

TermId term_from_index(int index) {
  if (index < 0) throw std::invalid_argument("term index must be non-negative");
  // Cycle anchored at Fall 2009; Spring and Summer of year y follow Fall of
  // year y-1, consistent with Spring < Summer < Fall within a year.
  static const Season cycle[3] = {Season::Fall, Season::Spring, Season::Summer};
  TermId t;
  t.index = index;
  t.season = cycle[index % 3];
  t.year = 2009 + (index + 2) / 3;
  return t;
}

namespace {

const std::vector<std::pair<std::string, double>>& letter_table() {
  static const std::vector<std::pair<std::string, double>> table = {
      {"A", 4.0},  {"A-", 3.67}, {"B+", 3.33}, {"B", 3.0},  {"B-", 2.67},
      {"C+", 2.33}, {"C", 2.0},  {"C-", 1.67}, {"D+", 1.33}, {"D", 1.0},
      {"D-", 0.67}, {"F", 0.0}};
  return table;
}

}  // namespace

const std::vector<double>& grade_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (const auto& [_, v] : letter_table()) g.push_back(v);
    std::sort(g.begin(), g.end());
    return g;
  }();
  return grid;
}

const std::vector<std::string>& grade_letters() {
  static const std::vector<std::string> letters = [] {
    std::vector<std::string> l;
    for (const auto& [name, _] : letter_table()) l.push_back(name);
    return l;
  }();
  return letters;
}

double grade_from_letter(const std::string& letter) {
  for (const auto& [name, value] : letter_table()) {
    if (name == letter) return value;
  }
  throw std::invalid_argument("unknown letter grade: '" + letter + "'");
}

std::string letter_from_grade(double points) {
  for (const auto& [name, value] : letter_table()) {
    if (std::abs(value - points) < 1e-9) return name;
  }
  throw std::invalid_argument("grade not on the letter grid: " + std::to_string(points));
}

bool is_on_grade_grid(double points) {
  for (double v : grade_grid()) {
    if (std::abs(v - points) < 1e-9) return true;
  }
  return false;
}

double snap_to_grade_grid(double raw) {
  const double x = std::min(kGradeMax, std::max(kGradeMin, raw));
  const auto& grid = grade_grid();
  double best = grid.front();
  double best_d = std::abs(x - best);
  for (double v : grid) {
    const double d = std::abs(x - v);
    if (d < best_d - 1e-15) {  // ties keep the lower grid value
      best = v;
      best_d = d;
    }
  }
  return best;
}

const char* cold_start_name(ColdStartClass c) {
  switch (c) {
    case ColdStartClass::NCS: return "NCS";
    case ColdStartClass::CSS: return "CSS";
    case ColdStartClass::CSC: return "CSC";
    case ColdStartClass::CSB: return "CSB";
  }
  return "?";
}

namespace {

int alevel_from_chrs(double total_chrs) {
  if (total_chrs < 30.0) return 0;
  if (total_chrs < 60.0) return 1;
  if (total_chrs < 90.0) return 2;
  if (total_chrs <= 120.0) return 3;
  return 4;
}

struct WeightedGpa {
  double num = 0.0;
  double den = 0.0;
  void add(double grade, const std::optional<double>& chrs) {
    const double w = chrs.value_or(1.0);
    num += grade * w;
    den += w;
  }
  std::optional<double> value() const {
    if (den <= 0.0) return std::nullopt;
    return num / den;
  }
};

}  // namespace

std::vector<DerivedFeatures> derive_features(const Transcript& t, int as_of_term_index) {
  for (const auto& r : t.records) {
    if (r.term.index > as_of_term_index) {
      throw std::invalid_argument("derive_features: record beyond the as-of term");
    }
  }

  const std::size_t n = t.records.size();
  std::vector<DerivedFeatures> out(n);

  // (entity, term) -> per-term aggregates, built in one pass.
  struct TermAgg {
    WeightedGpa gpa;
    double chrs = 0.0;   // hours enrolled this term (students)
    double count = 0.0;  // rows this term (courses)
  };
  std::unordered_map<std::string, std::map<int, TermAgg>> by_student;
  std::unordered_map<std::string, std::map<int, TermAgg>> by_course;
  by_student.reserve(n / 4 + 1);
  by_course.reserve(n / 16 + 1);

  for (const auto& r : t.records) {
    auto& s = by_student[r.sid][r.term.index];
    s.chrs += r.chrs.value_or(0.0);
    if (r.grade) s.gpa.add(*r.grade, r.chrs);
    auto& c = by_course[r.cid][r.term.index];
    c.count += 1.0;
    if (r.grade) c.gpa.add(*r.grade, r.chrs);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = t.records[i];
    DerivedFeatures& d = out[i];
    const int u = r.term.index;

    const auto& sterms = by_student.at(r.sid);
    const auto& cterms = by_course.at(r.cid);

    // Student history strictly before the row's term.
    WeightedGpa cum;
    double total_chrs = 0.0;
    int sterm = 0;
    const TermAgg* last_graded = nullptr;
    for (const auto& [ti, agg] : sterms) {
      if (ti >= u) break;
      ++sterm;
      total_chrs += agg.chrs;
      cum.num += agg.gpa.num;
      cum.den += agg.gpa.den;
      if (agg.gpa.den > 0.0) last_graded = &agg;
    }
    if (last_graded) d.lterm_gpa = last_graded->gpa.value();
    d.lterm_cum_gpa = cum.value();
    d.total_chrs = total_chrs;
    d.alevel = alevel_from_chrs(total_chrs);
    d.sterm = sterm;
    d.term_chrs = sterms.at(u).chrs;
    d.cohort_index = r.cohort ? r.cohort->index : sterms.begin()->first;

    // Course history.
    WeightedGpa ccum;
    double total_enrolled = 0.0;
    const TermAgg* clast = nullptr;
    for (const auto& [ti, agg] : cterms) {
      if (ti > u) break;
      total_enrolled += agg.count;
      if (ti < u) {
        ccum.num += agg.gpa.num;
        ccum.den += agg.gpa.den;
        if (agg.gpa.den > 0.0) clast = &agg;
      }
    }
    if (clast) d.lterm_cgpa = clast->gpa.value();
    d.lterm_cum_cgpa = ccum.value();
    d.num_enrolled = cterms.at(u).count;
    d.total_enrolled = total_enrolled;
  }
  return out;
}

SeenSets collect_seen(const Transcript& t, int first_prediction_term) {
  SeenSets seen;
  for (const auto& r : t.records) {
    if (r.term.index < first_prediction_term) {
      seen.students.insert(r.sid);
      seen.courses.insert(r.cid);
    }
  }
  return seen;
}

ColdStartClass classify_cold_start(const TranscriptRecord& r, const SeenSets& seen) {
  const bool s = seen.students.count(r.sid) > 0;
  const bool c = seen.courses.count(r.cid) > 0;
  if (s && c) return ColdStartClass::NCS;
  if (!s && c) return ColdStartClass::CSS;
  if (s && !c) return ColdStartClass::CSC;
  return ColdStartClass::CSB;
}

std::vector<TermColdStartRow> cold_start_by_term(const Transcript& t) {
  std::map<int, TermColdStartRow> rows;
  std::map<int, std::vector<std::size_t>> per_term;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    per_term[t.records[i].term.index].push_back(i);
  }
  SeenSets seen;
  for (const auto& [ti, idx] : per_term) {
    TermColdStartRow row;
    row.term = t.records[idx.front()].term;
    row.dyads = idx.size();
    for (std::size_t i : idx) {
      switch (classify_cold_start(t.records[i], seen)) {
        case ColdStartClass::NCS: ++row.ncs; break;
        case ColdStartClass::CSS: ++row.css; break;
        case ColdStartClass::CSC: ++row.csc; break;
        case ColdStartClass::CSB: ++row.csb; break;
      }
    }
    rows[ti] = row;
    for (std::size_t i : idx) {
      seen.students.insert(t.records[i].sid);
      seen.courses.insert(t.records[i].cid);
    }
  }
  std::vector<TermColdStartRow> out;
  out.reserve(rows.size());
  for (auto& [_, row] : rows) out.push_back(row);
  return out;
}

}  // namespace nextgrade
