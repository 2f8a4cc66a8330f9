#include "nextgrade/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace nextgrade {

std::vector<FeatureSpec> default_feature_specs(const std::vector<std::string>& extra_names) {
  const Treatment OH = Treatment::OneHot, RE = Treatment::Real, SK = Treatment::Skip;
  std::vector<FeatureSpec> specs = {
      {"sid", OH, SK},
      {"cid", OH, SK},
      {"iid", OH, SK},
      {"termnum", OH, RE},
      {"major", OH, OH},
      {"race", OH, OH},
      {"sex", OH, OH},
      {"age", RE, RE},
      {"zip", OH, SK},
      {"sat", RE, RE},
      {"hs", OH, SK},
      {"hsgpa", RE, RE},
      {"cohort", OH, RE},
      {"transfer", OH, RE},
      {"lterm_gpa", RE, RE},
      {"lterm_cum_gpa", RE, RE},
      {"term_chrs", RE, RE},
      {"total_chrs", RE, RE},
      {"alevel", OH, RE},
      {"sterm", OH, RE},
      {"cdisc", OH, OH},
      {"chrs", RE, RE},
      {"clevel", OH, RE},
      {"num_enrolled", RE, RE},
      {"total_enrolled", RE, RE},
      {"lterm_cgpa", RE, RE},
      {"lterm_cum_cgpa", RE, RE},
      {"iclass", OH, OH},
      {"irank", OH, OH},
      {"itenure", OH, OH},
  };
  for (const auto& name : extra_names) specs.push_back({name, OH, OH});
  return specs;
}

namespace {

Treatment treatment_from_string(const std::string& s) {
  if (s == "onehot") return Treatment::OneHot;
  if (s == "real") return Treatment::Real;
  if (s == "skip") return Treatment::Skip;
  throw std::invalid_argument("unknown treatment '" + s + "' (want onehot|real|skip)");
}

}  // namespace

void apply_feature_policy_json(std::vector<FeatureSpec>& specs, const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (!j.contains("features")) return;
  for (const auto& f : j.at("features")) {
    const std::string name = f.at("name").get<std::string>();
    auto it = std::find_if(specs.begin(), specs.end(),
                           [&](const FeatureSpec& s) { return s.name == name; });
    if (it == specs.end()) throw std::invalid_argument("feature policy: unknown feature '" + name + "'");
    if (f.contains("fm")) it->fm = treatment_from_string(f.at("fm").get<std::string>());
    if (f.contains("dense")) it->dense = treatment_from_string(f.at("dense").get<std::string>());
  }
}

namespace {

std::string cat_of_int(long long v) { return std::to_string(v); }

std::string cat_of_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

FeatureValue cat_value(const std::string& s) {
  FeatureValue v;
  v.cat = s;
  return v;
}

FeatureValue real_value(const std::optional<double>& x) {
  FeatureValue v;
  if (x) {
    v.real = *x;
    v.cat = cat_of_real(*x);
  }
  return v;
}

FeatureValue int_value(long long x) {
  FeatureValue v;
  v.real = static_cast<double>(x);
  v.cat = cat_of_int(x);
  return v;
}

}  // namespace

FeatureValue feature_value(const Transcript& t, std::size_t row, const DerivedFeatures& d,
                           const std::string& name) {
  const TranscriptRecord& r = t.records[row];
  if (name == "sid") return cat_value(r.sid);
  if (name == "cid") return cat_value(r.cid);
  if (name == "iid") return cat_value(r.effective_iid());
  if (name == "termnum") return int_value(r.term.index);
  if (name == "major") return cat_value(r.major);
  if (name == "race") return cat_value(r.race);
  if (name == "sex") return cat_value(r.sex);
  if (name == "age") return real_value(r.age);
  if (name == "zip") return cat_value(r.zip);
  if (name == "sat") return real_value(r.sat);
  if (name == "hs") return cat_value(r.hs);
  if (name == "hsgpa") return real_value(r.hsgpa);
  if (name == "cohort") return int_value(d.cohort_index);
  if (name == "transfer") return int_value(r.transfer ? 1 : 0);
  if (name == "lterm_gpa") return real_value(d.lterm_gpa);
  if (name == "lterm_cum_gpa") return real_value(d.lterm_cum_gpa);
  if (name == "term_chrs") return real_value(d.term_chrs);
  if (name == "total_chrs") return real_value(d.total_chrs);
  if (name == "alevel") return int_value(d.alevel);
  if (name == "sterm") return int_value(d.sterm);
  if (name == "cdisc") return cat_value(r.cdisc);
  if (name == "chrs") return real_value(r.chrs);
  if (name == "clevel") {
    FeatureValue v;
    if (r.clevel) {
      v.real = static_cast<double>(*r.clevel);
      v.cat = cat_of_int(*r.clevel);
    }
    return v;
  }
  if (name == "num_enrolled") return real_value(d.num_enrolled);
  if (name == "total_enrolled") return real_value(d.total_enrolled);
  if (name == "lterm_cgpa") return real_value(d.lterm_cgpa);
  if (name == "lterm_cum_cgpa") return real_value(d.lterm_cum_cgpa);
  if (name == "iclass") return cat_value(r.iclass);
  if (name == "irank") return cat_value(r.irank);
  if (name == "itenure") return cat_value(r.itenure);
  for (std::size_t i = 0; i < t.extra_feature_names.size(); ++i) {
    if (t.extra_feature_names[i] == name) {
      return cat_value(i < r.extra.size() ? r.extra[i] : std::string());
    }
  }
  throw std::invalid_argument("unknown feature '" + name + "'");
}

namespace {

ColumnLayout build_layout(const std::vector<FeatureSpec>& specs, Policy policy,
                          const std::unordered_map<std::string, CategoryTable>& cats) {
  ColumnLayout layout;
  int at = 0;
  for (const auto& spec : specs) {
    const Treatment tr = spec.treatment(policy);
    if (tr == Treatment::Skip) continue;
    Block b;
    b.feature = spec.name;
    b.treatment = tr;
    b.start = at;
    b.width = tr == Treatment::Real ? 1 : static_cast<int>(cats.at(spec.name).values.size());
    at += b.width;
    layout.blocks.push_back(std::move(b));
  }
  layout.columns = at;
  return layout;
}

}  // namespace

EncoderState fit_encoder(const Transcript& t, const std::vector<std::size_t>& training_rows,
                         const std::vector<DerivedFeatures>& derived,
                         const std::vector<FeatureSpec>& specs) {
  if (training_rows.empty()) throw std::invalid_argument("fit_encoder: empty training set");
  EncoderState state;
  state.specs = specs;

  for (const auto& spec : specs) {
    const bool as_cat = spec.fm == Treatment::OneHot || spec.dense == Treatment::OneHot;
    const bool as_real = spec.fm == Treatment::Real || spec.dense == Treatment::Real;
    if (!as_cat && !as_real) continue;

    std::vector<std::string> cat_values;
    std::vector<double> real_values;
    for (std::size_t row : training_rows) {
      const FeatureValue v = feature_value(t, row, derived[row], spec.name);
      if (as_cat && !v.cat.empty()) cat_values.push_back(v.cat);
      if (as_real && v.real) real_values.push_back(*v.real);
    }

    if (as_cat) {
      std::sort(cat_values.begin(), cat_values.end());
      cat_values.erase(std::unique(cat_values.begin(), cat_values.end()), cat_values.end());
      CategoryTable table;
      table.values = std::move(cat_values);
      for (std::size_t i = 0; i < table.values.size(); ++i) {
        table.index[table.values[i]] = static_cast<int>(i);
      }
      state.categories[spec.name] = std::move(table);
    }
    if (as_real) {
      RealStats st;
      st.n_present = real_values.size();
      if (real_values.empty()) {
        st.median = 0.0;
        state.warnings.push_back("feature '" + spec.name + "' absent in all training rows; median set to 0");
      } else {
        std::sort(real_values.begin(), real_values.end());
        const std::size_t n = real_values.size();
        st.median = n % 2 == 1 ? real_values[n / 2]
                               : 0.5 * (real_values[n / 2 - 1] + real_values[n / 2]);
        double sum = 0.0;
        for (double x : real_values) sum += x;
        st.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double x : real_values) ss += (x - st.mean) * (x - st.mean);
        st.stddev = std::sqrt(ss / static_cast<double>(n));
      }
      state.reals[spec.name] = st;
    }
  }

  state.fm = build_layout(specs, Policy::Fm, state.categories);
  state.dense = build_layout(specs, Policy::Dense, state.categories);
  return state;
}

EncoderState select_features(const EncoderState& state, const std::set<std::string>& keep) {
  if (keep.empty()) throw std::invalid_argument("select_features: empty keep set");
  for (const auto& name : keep) {
    const bool known = std::any_of(state.specs.begin(), state.specs.end(),
                                   [&](const FeatureSpec& s) { return s.name == name; });
    if (!known) throw std::invalid_argument("select_features: unknown feature '" + name + "'");
  }
  EncoderState out;
  for (const auto& spec : state.specs) {
    if (!keep.count(spec.name)) continue;
    out.specs.push_back(spec);
    if (auto it = state.categories.find(spec.name); it != state.categories.end()) {
      out.categories[spec.name] = it->second;
    }
    if (auto it = state.reals.find(spec.name); it != state.reals.end()) {
      out.reals[spec.name] = it->second;
    }
  }
  out.fm = build_layout(out.specs, Policy::Fm, out.categories);
  out.dense = build_layout(out.specs, Policy::Dense, out.categories);
  out.warnings = state.warnings;
  return out;
}

DesignMatrix encode(const Transcript& t, const std::vector<std::size_t>& rows,
                    const std::vector<DerivedFeatures>& derived, const EncoderState& state,
                    Policy policy, const std::vector<ColdStartClass>* cs) {
  const ColumnLayout& layout = state.layout(policy);
  DesignMatrix m;
  m.columns = layout.columns;
  m.blocks = layout.blocks;
  m.row_ptr.reserve(rows.size() + 1);
  m.target.reserve(rows.size());
  m.meta.reserve(rows.size());

  for (std::size_t out_i = 0; out_i < rows.size(); ++out_i) {
    const std::size_t row = rows[out_i];
    const TranscriptRecord& r = t.records[row];
    const DerivedFeatures& d = derived[row];
    for (const Block& b : layout.blocks) {
      const FeatureValue v = feature_value(t, row, d, b.feature);
      if (b.treatment == Treatment::OneHot) {
        if (v.cat.empty()) continue;  // absent category: zero block
        const auto& table = state.categories.at(b.feature);
        auto it = table.index.find(v.cat);
        if (it == table.index.end()) continue;  // unseen category: zero block
        m.col.push_back(b.start + it->second);
        m.val.push_back(1.0);
      } else {
        const auto& st = state.reals.at(b.feature);
        if (v.real && !st.dead()) {
          m.col.push_back(b.start);
          m.val.push_back(st.z(*v.real));
        } else if (policy == Policy::Dense) {
          m.col.push_back(b.start);
          m.val.push_back(st.dead() ? 0.0 : st.z(st.median));
        }
        // FM policy: absent (or unsupported) reals emit no entry
      }
    }
    m.row_ptr.push_back(m.col.size());
    m.target.push_back(r.grade ? *r.grade : std::numeric_limits<double>::quiet_NaN());
    RowMeta meta;
    meta.sid = r.sid;
    meta.cid = r.cid;
    meta.term_index = r.term.index;
    meta.season = r.term.season;
    meta.cohort_index = d.cohort_index;
    meta.transfer = r.transfer;
    meta.cs = cs ? (*cs)[out_i] : ColdStartClass::NCS;
    m.meta.push_back(std::move(meta));
  }
  return m;
}

std::vector<double> DesignMatrix::to_dense() const {
  std::vector<double> dense(rows() * static_cast<std::size_t>(columns), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    double* out = dense.data() + i * static_cast<std::size_t>(columns);
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) out[col[k]] = val[k];
  }
  return dense;
}

const std::string& DesignMatrix::feature_of_column(int c) const {
  for (const Block& b : blocks) {
    if (c >= b.start && c < b.start + b.width) return b.feature;
  }
  throw std::out_of_range("column " + std::to_string(c) + " outside the layout");
}

}  // namespace nextgrade
