#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "nextgrade/types.hpp"

namespace nextgrade {

struct ParseOptions {
  // A file is rejected when more than this fraction of its data rows are
  // malformed (bad numbers, wrong column counts).
  double max_malformed_fraction = 0.01;
};

struct ParseResult {
  Transcript transcript;
  std::size_t dropped_unmappable_grades = 0;
  std::vector<std::string> row_errors;  // "line N: why", one per malformed row
};

// Reads a transcript CSV (UTF-8, comma separated, header row). Required
// columns: sid, cid, termnum, and grade (or its alias grdpts).
// All other known columns are optional; unknown columns are treated as extra
// categorical features. Rows whose grade token maps to no grade-point value
// (withdrawals, audits, ...) are dropped and counted; an empty grade marks a
// prediction-only row. Throws std::runtime_error on unreadable files, missing
// required columns, or too many malformed rows.
ParseResult parse_transcript_csv(const std::string& path, const ParseOptions& opts = {});
ParseResult parse_transcript_csv(std::istream& in, const ParseOptions& opts = {});

void write_transcript_csv(const std::string& path, const Transcript& t);
void write_transcript_csv(std::ostream& out, const Transcript& t);

}  // namespace nextgrade
