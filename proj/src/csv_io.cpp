#include "nextgrade/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace nextgrade {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::optional<int> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  const int v = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

Season parse_season(const std::string& s) {
  if (s == "Spring") return Season::Spring;
  if (s == "Summer") return Season::Summer;
  if (s == "Fall") return Season::Fall;
  throw std::invalid_argument("bad season '" + s + "'");
}

// Grade cell: letter grade, numeric in [0,4], empty (prediction-only row), or
// an unmappable token such as W/AU (dropped by the caller).
enum class GradeKind { Value, Absent, Unmappable };

GradeKind parse_grade(const std::string& s, double* out) {
  if (s.empty()) return GradeKind::Absent;
  try {
    *out = grade_from_letter(s);
    return GradeKind::Value;
  } catch (const std::invalid_argument&) {
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size() && v >= kGradeMin && v <= kGradeMax) {
      *out = v;
      return GradeKind::Value;
    }
  } catch (...) {
  }
  return GradeKind::Unmappable;
}

const std::vector<std::string>& known_columns() {
  static const std::vector<std::string> cols = {
      "sid",   "cid",   "iid",   "termnum", "season", "year",  "grade",
      "grdpts", "major", "race",  "sex",     "age",    "zip",   "sat",
      "hs",    "hsgpa", "cohort", "transfer", "cdisc",  "chrs",  "clevel",
      "iclass", "irank", "itenure", "institution_id"};
  return cols;
}

}  // namespace

ParseResult parse_transcript_csv(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transcript file: " + path);
  try {
    return parse_transcript_csv(in, opts);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

ParseResult parse_transcript_csv(std::istream& in, const ParseOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file (no header row)");
  const std::vector<std::string> header = split_csv_line(line);

  std::unordered_map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

  auto col_of = [&](const std::string& name) -> int {
    auto it = col.find(name);
    return it == col.end() ? -1 : it->second;
  };

  for (const char* required : {"sid", "cid", "termnum"}) {
    if (col_of(required) < 0) {
      throw std::runtime_error(std::string("missing required column \"") + required + "\"");
    }
  }
  int grade_col = col_of("grade");
  if (grade_col < 0) grade_col = col_of("grdpts");
  if (grade_col < 0) throw std::runtime_error("missing required column \"grade\"");

  // Anything not in the known schema becomes an extra categorical feature.
  ParseResult result;
  std::vector<std::pair<std::string, int>> extra_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    bool known = false;
    for (const auto& k : known_columns()) {
      if (header[i] == k) {
        known = true;
        break;
      }
    }
    if (!known) extra_cols.emplace_back(header[i], static_cast<int>(i));
  }
  for (const auto& [name, _] : extra_cols) result.transcript.extra_feature_names.push_back(name);

  auto cell = [&](const std::vector<std::string>& f, int c) -> std::string {
    return (c >= 0 && c < static_cast<int>(f.size())) ? f[c] : std::string();
  };

  std::size_t data_rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++data_rows;
    const std::vector<std::string> f = split_csv_line(line);
    try {
      if (f.size() != header.size()) {
        throw std::invalid_argument("expected " + std::to_string(header.size()) +
                                    " fields, got " + std::to_string(f.size()));
      }
      TranscriptRecord r;
      r.sid = cell(f, col_of("sid"));
      r.cid = cell(f, col_of("cid"));
      if (r.sid.empty() || r.cid.empty()) throw std::invalid_argument("empty sid/cid");
      r.iid = cell(f, col_of("iid"));

      const auto termnum = parse_int(cell(f, col_of("termnum")));
      if (!termnum || *termnum < 0) throw std::invalid_argument("bad termnum");
      const std::string season = cell(f, col_of("season"));
      const std::string year = cell(f, col_of("year"));
      if (!season.empty() && !year.empty()) {
        r.term.index = *termnum;
        r.term.season = parse_season(season);
        r.term.year = *parse_int(year);
      } else {
        r.term = term_from_index(*termnum);
      }

      double g = 0.0;
      switch (parse_grade(cell(f, grade_col), &g)) {
        case GradeKind::Value: r.grade = g; break;
        case GradeKind::Absent: break;
        case GradeKind::Unmappable:
          ++result.dropped_unmappable_grades;
          continue;
      }

      r.major = cell(f, col_of("major"));
      r.race = cell(f, col_of("race"));
      r.sex = cell(f, col_of("sex"));
      r.age = parse_real(cell(f, col_of("age")));
      r.zip = cell(f, col_of("zip"));
      r.sat = parse_real(cell(f, col_of("sat")));
      r.hs = cell(f, col_of("hs"));
      r.hsgpa = parse_real(cell(f, col_of("hsgpa")));
      if (auto c = parse_int(cell(f, col_of("cohort")))) r.cohort = term_from_index(*c);
      const std::string tr = cell(f, col_of("transfer"));
      r.transfer = (tr == "1" || tr == "true" || tr == "T");
      r.cdisc = cell(f, col_of("cdisc"));
      r.chrs = parse_real(cell(f, col_of("chrs")));
      r.clevel = parse_int(cell(f, col_of("clevel")));
      r.iclass = cell(f, col_of("iclass"));
      r.irank = cell(f, col_of("irank"));
      r.itenure = cell(f, col_of("itenure"));
      r.institution_id = cell(f, col_of("institution_id"));

      r.extra.reserve(extra_cols.size());
      for (const auto& [_, c] : extra_cols) r.extra.push_back(cell(f, c));

      result.transcript.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      result.row_errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  if (data_rows > 0 &&
      static_cast<double>(result.row_errors.size()) >
          opts.max_malformed_fraction * static_cast<double>(data_rows)) {
    throw std::runtime_error("rejected: " + std::to_string(result.row_errors.size()) + " of " +
                             std::to_string(data_rows) + " rows malformed (first: " +
                             result.row_errors.front() + ")");
  }
  return result;
}

namespace {

std::string fmt_real(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", *v);
  return buf;
}

std::string fmt_grade(const std::optional<double>& v) {
  if (!v) return "";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace

void write_transcript_csv(const std::string& path, const Transcript& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write transcript file: " + path);
  write_transcript_csv(out, t);
}

void write_transcript_csv(std::ostream& out, const Transcript& t) {
  out << "sid,cid,iid,termnum,season,year,grade,major,race,sex,age,zip,sat,hs,hsgpa,"
         "cohort,transfer,cdisc,chrs,clevel,iclass,irank,itenure,institution_id";
  for (const auto& name : t.extra_feature_names) out << ',' << name;
  out << '\n';
  for (const auto& r : t.records) {
    out << r.sid << ',' << r.cid << ',' << r.iid << ',' << r.term.index << ','
        << season_name(r.term.season) << ',' << r.term.year << ',' << fmt_grade(r.grade) << ','
        << r.major << ',' << r.race << ',' << r.sex << ',' << fmt_real(r.age) << ',' << r.zip
        << ',' << fmt_real(r.sat) << ',' << r.hs << ',' << fmt_real(r.hsgpa) << ','
        << (r.cohort ? std::to_string(r.cohort->index) : std::string()) << ','
        << (r.transfer ? 1 : 0) << ',' << r.cdisc << ',' << fmt_real(r.chrs) << ','
        << (r.clevel ? std::to_string(*r.clevel) : std::string()) << ',' << r.iclass << ','
        << r.irank << ',' << r.itenure << ',' << r.institution_id;
    for (const auto& v : r.extra) out << ',' << v;
    out << '\n';
  }
}

}  // namespace nextgrade
