#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "nextgrade/fm.hpp"
#include "nextgrade/forest.hpp"
#include "nextgrade/linear_sgd.hpp"
#include "nextgrade/pmlr.hpp"

namespace nextgrade {

// Additive decomposition of one prediction around the global intercept.
// Keys are small integers chosen by the caller (feature-block ids); the
// invariant intercept + sum(values) == raw prediction holds to 1e-9.
struct OneWayTerm {
  int key = 0;
  double value = 0.0;
  double abs_x = 0.0;
};

struct TwoWayTerm {
  int key_a = 0;
  int key_b = 0;
  double value = 0.0;
  double abs_xa = 0.0;
  double abs_xb = 0.0;
};

struct TermDecomposition {
  double intercept = 0.0;
  double prediction = 0.0;  // intercept + all additive terms
  std::vector<OneWayTerm> one_way;
  std::vector<TwoWayTerm> two_way;
};

TermDecomposition fm_decompose(const FmModel& m, const int* cols, const double* vals,
                               std::size_t nnz, const std::vector<int>& col_to_key);

TermDecomposition pmlr_decompose(const PmlrModel& m, const std::string& sid,
                                 const std::string& cid, const double* row,
                                 const std::vector<int>& col_to_key, int sid_key, int cid_key);

TermDecomposition linear_decompose(const LinearModel& m, const double* row,
                                   const std::vector<int>& col_to_key);

// Per-row MADImp shares. share_f = (|1-way_f| + apportioned |2-way_{f,*}|) / T_d
// where each pairwise term's absolute value splits between its two features in
// proportion |x_f| / (|x_f| + |x_f'|), and T_d is the total absolute deviation
// from the intercept. Rows with T_d = 0 yield all-zero shares and are excluded
// from aggregation.
struct RowShares {
  bool valid = false;  // T_d > 0
  std::vector<double> share;       // per key, sums to 1 when valid
  std::vector<double> share_1way;  // 1-way portion of share
  std::vector<double> share_2way;  // 2-way portion of share
};

RowShares madimp_row(const TermDecomposition& d, std::size_t n_keys);

// Streaming mean of row shares over one term's records.
class MadimpAccumulator {
 public:
  explicit MadimpAccumulator(std::size_t n_keys);
  bool add(const TermDecomposition& d);  // false when the row had T_d = 0
  std::size_t rows_counted() const { return rows_; }
  std::vector<double> mean_share() const;
  std::vector<double> mean_share_1way() const;
  std::vector<double> mean_share_2way() const;

 private:
  std::size_t rows_ = 0;
  std::vector<double> sum_, sum1_, sum2_;
  std::vector<double> scratch_t_, scratch_1_, scratch_2_;
};

struct ImportanceEntry {
  std::string feature;
  double share = 0.0;
  double share_1way = 0.0;
  double share_2way = 0.0;
};

struct TermImportance {
  int term_index = 0;
  double weight = 0.0;  // records predicted in the term
  std::vector<ImportanceEntry> entries;
};

struct ImportanceReport {
  std::vector<ImportanceEntry> aggregate;  // sorted by descending share
  std::vector<TermImportance> per_term;
};

// Cross-term mean weighted by each term's predicted-record count.
ImportanceReport aggregate_importance(std::vector<TermImportance> per_term);

struct SelectionRule {
  double threshold = 0.001;  // block share >= threshold
  int top_n = 0;             // when > 0, overrides the threshold rule
};

// Feature names passing the rule; sid and cid are always retained. Rejects an
// empty selection.
std::set<std::string> madimp_select(const std::vector<ImportanceEntry>& aggregate,
                                    const SelectionRule& rule);

// Gini importance: per-term share of the total squared-error reduction over
// all splits, block-aggregated and normalized to sum 1; terms combine by
// record-count-weighted mean. Rejects forests without split records.
struct GiniTermInput {
  const ForestModel* forest = nullptr;
  std::vector<int> col_to_key;
  std::vector<std::string> key_names;
  int term_index = 0;
  double weight = 0.0;
};

ImportanceReport gini_importance(const std::vector<GiniTermInput>& terms);

std::string importance_to_csv(const ImportanceReport& report);
std::string importance_evolution_to_csv(const ImportanceReport& report);
std::string importance_to_json(const ImportanceReport& report);

}  // namespace nextgrade
