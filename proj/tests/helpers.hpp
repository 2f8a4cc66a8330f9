#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nextgrade/encoder.hpp"
#include "nextgrade/fm.hpp"
#include "nextgrade/rng.hpp"
#include "nextgrade/types.hpp"

namespace testutil {

using namespace nextgrade;

// Independent O(p^2 k) evaluation of the FM equation, used as the oracle for
// the fast sum-of-squares path.
inline double naive_fm_predict(const FmModel& m, const std::vector<std::pair<int, double>>& row) {
  double pred = m.w0;
  for (const auto& [c, x] : row) pred += m.w[c] * x;
  for (std::size_t a = 0; a < row.size(); ++a) {
    for (std::size_t b = a + 1; b < row.size(); ++b) {
      double z = 0.0;
      for (int f = 0; f < m.rank; ++f) {
        z += m.v[static_cast<std::size_t>(row[a].first) * m.rank + f] *
             m.v[static_cast<std::size_t>(row[b].first) * m.rank + f];
      }
      pred += row[a].second * row[b].second * z;
    }
  }
  return pred;
}

inline FmModel random_fm_model(Rng& rng, int columns, int rank) {
  FmModel m;
  m.columns = columns;
  m.rank = rank;
  m.w0 = rng.normal(0.0, 1.0);
  m.w.resize(columns);
  for (double& x : m.w) x = rng.normal(0.0, 0.5);
  m.v.resize(static_cast<std::size_t>(columns) * rank);
  for (double& x : m.v) x = rng.normal(0.0, 0.3);
  return m;
}

inline std::vector<std::pair<int, double>> random_sparse_row(Rng& rng, int columns,
                                                             bool one_hot_only = false) {
  const int nnz = 2 + static_cast<int>(rng.index(std::min(columns - 1, 8)));
  std::vector<int> cols(columns);
  std::iota(cols.begin(), cols.end(), 0);
  rng.shuffle(cols);
  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < nnz; ++i) {
    const double x = one_hot_only ? 1.0 : rng.normal(0.0, 1.5);
    if (x != 0.0) row.push_back({cols[i], x});
  }
  std::sort(row.begin(), row.end());
  return row;
}

// Second implementation of the metric formulas (different accumulation
// order), kept independent of nextgrade::compute_metrics.
struct OracleMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double mae_std = 0.0;
};

inline OracleMetrics oracle_metrics(const std::vector<std::pair<double, double>>& truth_pred) {
  std::vector<double> abs_errors;
  abs_errors.reserve(truth_pred.size());
  for (const auto& [t, p] : truth_pred) abs_errors.push_back(std::abs(p - t));
  std::sort(abs_errors.begin(), abs_errors.end());
  OracleMetrics m;
  double sq = 0.0, s = 0.0;
  for (double e : abs_errors) {
    sq += e * e;
    s += e;
  }
  const double n = static_cast<double>(abs_errors.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = s / n;
  double var = 0.0;
  for (double e : abs_errors) var += (e - m.mae) * (e - m.mae);
  m.mae_std = std::sqrt(var / n);
  return m;
}

// Hand-built design matrix from sparse rows.
inline DesignMatrix make_matrix(int columns,
                                const std::vector<std::vector<std::pair<int, double>>>& rows,
                                const std::vector<double>& targets) {
  DesignMatrix m;
  m.columns = columns;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [c, x] : rows[i]) {
      m.col.push_back(c);
      m.val.push_back(x);
    }
    m.row_ptr.push_back(m.col.size());
    m.target.push_back(targets[i]);
    m.meta.push_back({});
  }
  Block b;
  b.feature = "all";
  b.treatment = Treatment::Real;
  b.start = 0;
  b.width = columns;
  m.blocks.push_back(b);
  return m;
}

// Minimal transcript row factory.
inline TranscriptRecord make_record(const std::string& sid, const std::string& cid, int term,
                                    double grade, double chrs = 3.0) {
  TranscriptRecord r;
  r.sid = sid;
  r.cid = cid;
  r.iid = "i0";
  r.term = term_from_index(term);
  r.grade = grade;
  r.chrs = chrs;
  r.major = "M0";
  r.race = "R0";
  r.sex = "F";
  r.zip = "Z0";
  r.hs = "H0";
  r.cdisc = "D0";
  r.clevel = 1;
  r.iclass = "Adjunct";
  r.irank = "Instructor";
  r.itenure = "Term";
  r.hsgpa = 3.0;
  r.age = 19;
  r.sat = 1000;
  return r;
}

}  // namespace testutil
