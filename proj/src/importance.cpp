#include "nextgrade/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace nextgrade {

TermDecomposition fm_decompose(const FmModel& m, const int* cols, const double* vals,
                               std::size_t nnz, const std::vector<int>& col_to_key) {
  TermDecomposition d;
  d.intercept = m.w0;
  d.prediction = m.w0;
  d.one_way.reserve(nnz);
  for (std::size_t i = 0; i < nnz; ++i) {
    const double value = m.w[cols[i]] * vals[i];
    d.one_way.push_back({col_to_key[cols[i]], value, std::abs(vals[i])});
    d.prediction += value;
  }
  for (std::size_t a = 0; a < nnz; ++a) {
    for (std::size_t b = a + 1; b < nnz; ++b) {
      const double value = vals[a] * vals[b] * m.pair_weight(cols[a], cols[b]);
      d.two_way.push_back({col_to_key[cols[a]], col_to_key[cols[b]], value,
                           std::abs(vals[a]), std::abs(vals[b])});
      d.prediction += value;
    }
  }
  return d;
}

TermDecomposition pmlr_decompose(const PmlrModel& m, const std::string& sid,
                                 const std::string& cid, const double* row,
                                 const std::vector<int>& col_to_key, int sid_key, int cid_key) {
  TermDecomposition d;
  d.intercept = m.w0;
  d.prediction = m.w0;

  const auto si = m.student_index.find(sid);
  const auto ci = m.course_index.find(cid);
  const double s = si != m.student_index.end() ? m.student_bias[si->second] : 0.0;
  const double c = ci != m.course_index.end() ? m.course_bias[ci->second] : 0.0;
  d.one_way.push_back({sid_key, s, 1.0});
  d.one_way.push_back({cid_key, c, 1.0});
  d.prediction += s + c;

  // effective per-column coefficient: P_i . W_{:,c}
  const double uniform = 1.0 / m.k;
  const double* P = si != m.student_index.end()
                        ? m.membership.data() + static_cast<std::size_t>(si->second) * m.k
                        : nullptr;
  for (std::size_t col = 0; col < m.columns; ++col) {
    if (row[col] == 0.0) continue;
    double coef = 0.0;
    for (int l = 0; l < m.k; ++l) {
      coef += (P ? P[l] : uniform) * m.coef[static_cast<std::size_t>(l) * m.columns + col];
    }
    const double value = coef * row[col];
    d.one_way.push_back({col_to_key[col], value, std::abs(row[col])});
    d.prediction += value;
  }
  return d;
}

TermDecomposition linear_decompose(const LinearModel& m, const double* row,
                                   const std::vector<int>& col_to_key) {
  TermDecomposition d;
  d.intercept = m.intercept;
  d.prediction = m.intercept;
  for (std::size_t col = 0; col < m.coef.size(); ++col) {
    if (row[col] == 0.0) continue;
    const double value = m.coef[col] * row[col];
    d.one_way.push_back({col_to_key[col], value, std::abs(row[col])});
    d.prediction += value;
  }
  return d;
}

namespace {

// Fills per-key absolute-deviation totals; returns T_d.
double deviations(const TermDecomposition& d, std::vector<double>& one, std::vector<double>& two) {
  double total = 0.0;
  for (const auto& t : d.one_way) {
    const double a = std::abs(t.value);
    one[t.key] += a;
    total += a;
  }
  for (const auto& t : d.two_way) {
    const double a = std::abs(t.value);
    if (a == 0.0) continue;
    const double denom = t.abs_xa + t.abs_xb;
    const double fa = denom > 0.0 ? t.abs_xa / denom : 0.5;
    two[t.key_a] += a * fa;
    two[t.key_b] += a * (1.0 - fa);
    total += a;
  }
  return total;
}

}  // namespace

RowShares madimp_row(const TermDecomposition& d, std::size_t n_keys) {
  RowShares out;
  out.share.assign(n_keys, 0.0);
  out.share_1way.assign(n_keys, 0.0);
  out.share_2way.assign(n_keys, 0.0);
  std::vector<double> one(n_keys, 0.0), two(n_keys, 0.0);
  const double total = deviations(d, one, two);
  if (total <= 0.0) return out;
  out.valid = true;
  for (std::size_t k = 0; k < n_keys; ++k) {
    out.share_1way[k] = one[k] / total;
    out.share_2way[k] = two[k] / total;
    out.share[k] = out.share_1way[k] + out.share_2way[k];
  }
  return out;
}

MadimpAccumulator::MadimpAccumulator(std::size_t n_keys)
    : sum_(n_keys, 0.0),
      sum1_(n_keys, 0.0),
      sum2_(n_keys, 0.0),
      scratch_t_(n_keys, 0.0),
      scratch_1_(n_keys, 0.0),
      scratch_2_(n_keys, 0.0) {}

bool MadimpAccumulator::add(const TermDecomposition& d) {
  std::fill(scratch_1_.begin(), scratch_1_.end(), 0.0);
  std::fill(scratch_2_.begin(), scratch_2_.end(), 0.0);
  const double total = deviations(d, scratch_1_, scratch_2_);
  if (total <= 0.0) return false;
  ++rows_;
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    sum1_[k] += scratch_1_[k] / total;
    sum2_[k] += scratch_2_[k] / total;
    sum_[k] += (scratch_1_[k] + scratch_2_[k]) / total;
  }
  return true;
}

std::vector<double> MadimpAccumulator::mean_share() const {
  std::vector<double> out(sum_.size(), 0.0);
  if (rows_ == 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sum_[k] / static_cast<double>(rows_);
  return out;
}

std::vector<double> MadimpAccumulator::mean_share_1way() const {
  std::vector<double> out(sum1_.size(), 0.0);
  if (rows_ == 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sum1_[k] / static_cast<double>(rows_);
  return out;
}

std::vector<double> MadimpAccumulator::mean_share_2way() const {
  std::vector<double> out(sum2_.size(), 0.0);
  if (rows_ == 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sum2_[k] / static_cast<double>(rows_);
  return out;
}

ImportanceReport aggregate_importance(std::vector<TermImportance> per_term) {
  if (per_term.empty()) throw std::invalid_argument("aggregate_importance: no terms");
  std::map<std::string, ImportanceEntry> acc;
  double total_weight = 0.0;
  for (const auto& term : per_term) total_weight += term.weight;
  for (const auto& term : per_term) {
    const double w = total_weight > 0.0 ? term.weight / total_weight
                                        : 1.0 / static_cast<double>(per_term.size());
    for (const auto& e : term.entries) {
      auto& a = acc[e.feature];
      a.feature = e.feature;
      a.share += w * e.share;
      a.share_1way += w * e.share_1way;
      a.share_2way += w * e.share_2way;
    }
  }
  ImportanceReport report;
  report.per_term = std::move(per_term);
  report.aggregate.reserve(acc.size());
  for (auto& [_, e] : acc) report.aggregate.push_back(std::move(e));
  std::sort(report.aggregate.begin(), report.aggregate.end(),
            [](const ImportanceEntry& a, const ImportanceEntry& b) {
              return a.share != b.share ? a.share > b.share : a.feature < b.feature;
            });
  return report;
}

std::set<std::string> madimp_select(const std::vector<ImportanceEntry>& aggregate,
                                    const SelectionRule& rule) {
  if (aggregate.empty()) throw std::invalid_argument("madimp_select: empty aggregate report");
  std::set<std::string> keep;
  if (rule.top_n > 0) {
    // aggregate is sorted by descending share
    for (const auto& e : aggregate) {
      if (static_cast<int>(keep.size()) >= rule.top_n) break;
      keep.insert(e.feature);
    }
  } else {
    for (const auto& e : aggregate) {
      if (e.share >= rule.threshold) keep.insert(e.feature);
    }
  }
  keep.insert("sid");
  keep.insert("cid");
  return keep;
}

ImportanceReport gini_importance(const std::vector<GiniTermInput>& terms) {
  if (terms.empty()) throw std::invalid_argument("gini_importance: no terms");
  std::vector<TermImportance> per_term;
  per_term.reserve(terms.size());
  for (const auto& input : terms) {
    bool any_split = false;
    std::vector<double> gain_by_key(input.key_names.size(), 0.0);
    for (const Tree& tree : input.forest->trees) {
      for (const SplitGain& g : tree.gains) {
        any_split = true;
        gain_by_key[input.col_to_key[g.feature]] += g.gain;
      }
    }
    if (!any_split) {
      throw std::invalid_argument("gini_importance: forest for term " +
                                  std::to_string(input.term_index) + " has no split records");
    }
    double total = 0.0;
    for (double g : gain_by_key) total += g;
    TermImportance ti;
    ti.term_index = input.term_index;
    ti.weight = input.weight;
    for (std::size_t k = 0; k < gain_by_key.size(); ++k) {
      ImportanceEntry e;
      e.feature = input.key_names[k];
      e.share = total > 0.0 ? gain_by_key[k] / total : 0.0;
      ti.entries.push_back(std::move(e));
    }
    per_term.push_back(std::move(ti));
  }
  return aggregate_importance(std::move(per_term));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string importance_to_csv(const ImportanceReport& report) {
  std::string out = "feature,share,share_1way,share_2way\n";
  for (const auto& e : report.aggregate) {
    out += e.feature + "," + fmt(e.share) + "," + fmt(e.share_1way) + "," + fmt(e.share_2way) + "\n";
  }
  return out;
}

std::string importance_evolution_to_csv(const ImportanceReport& report) {
  std::string out = "termnum,feature,share,share_1way,share_2way\n";
  for (const auto& term : report.per_term) {
    for (const auto& e : term.entries) {
      out += std::to_string(term.term_index) + "," + e.feature + "," + fmt(e.share) + "," +
             fmt(e.share_1way) + "," + fmt(e.share_2way) + "\n";
    }
  }
  return out;
}

std::string importance_to_json(const ImportanceReport& report) {
  nlohmann::json j;
  auto entry = [](const ImportanceEntry& e) {
    return nlohmann::json{{"feature", e.feature},
                          {"share", e.share},
                          {"share_1way", e.share_1way},
                          {"share_2way", e.share_2way}};
  };
  j["aggregate"] = nlohmann::json::array();
  for (const auto& e : report.aggregate) j["aggregate"].push_back(entry(e));
  j["per_term"] = nlohmann::json::array();
  for (const auto& t : report.per_term) {
    nlohmann::json jt{{"termnum", t.term_index}, {"weight", t.weight}};
    jt["entries"] = nlohmann::json::array();
    for (const auto& e : t.entries) jt["entries"].push_back(entry(e));
    j["per_term"].push_back(std::move(jt));
  }
  return j.dump(2);
}

}  // namespace nextgrade
