#pragma once

#include <unordered_set>
#include <vector>

#include "nextgrade/types.hpp"

namespace nextgrade {

// Computes DerivedFeatures for every record in `t`, aligned by index.
// `as_of` caps the data horizon: no record may have term index > as_of, and
// grade-derived aggregates for a row with term u use grades from terms < u
// only, so rows are reproduced exactly as they looked when they occurred.
std::vector<DerivedFeatures> derive_features(const Transcript& t, int as_of_term_index);

struct SeenSets {
  std::unordered_set<std::string> students;
  std::unordered_set<std::string> courses;
};

// Identifier sets over training terms (index < first_prediction_term).
SeenSets collect_seen(const Transcript& t, int first_prediction_term);

ColdStartClass classify_cold_start(const TranscriptRecord& r, const SeenSets& seen);

// Per-term dyad counts in the shape of a cold-start proportion table.
struct TermColdStartRow {
  TermId term;
  std::size_t dyads = 0;
  std::size_t ncs = 0;
  std::size_t css = 0;
  std::size_t csc = 0;
  std::size_t csb = 0;
  std::size_t cs() const { return css + csc + csb; }
};

std::vector<TermColdStartRow> cold_start_by_term(const Transcript& t);

}  // namespace nextgrade
