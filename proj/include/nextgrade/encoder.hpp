#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "nextgrade/types.hpp"

namespace nextgrade {

// Two encoding policies. The FM policy one-hot encodes everything that can be
// one-hot encoded (including the sparse ID features) and leaves absent reals
// unimputed; the dense policy imputes medians, Z-scales, keeps ordinals as
// real values, and drops the highly sparse ID blocks.
enum class Policy { Fm = 0, Dense = 1 };

enum class Treatment { Skip = 0, OneHot = 1, Real = 2 };

struct FeatureSpec {
  std::string name;
  Treatment fm = Treatment::Skip;
  Treatment dense = Treatment::Skip;

  Treatment treatment(Policy p) const { return p == Policy::Fm ? fm : dense; }
};

// Built-in policy table covering the whole transcript feature set plus any
// dataset-specific extra categorical columns.
std::vector<FeatureSpec> default_feature_specs(const std::vector<std::string>& extra_names);

// Applies a JSON policy file ({"features":[{"name":..,"fm":"onehot","dense":"skip"},..]})
// over a spec table. Unknown names or treatments are rejected.
void apply_feature_policy_json(std::vector<FeatureSpec>& specs, const std::string& json_text);

// The raw value of one feature for one row, in both representations.
struct FeatureValue {
  std::string cat;                 // empty = absent as a category
  std::optional<double> real;      // nullopt = absent as a real
};

FeatureValue feature_value(const Transcript& t, std::size_t row, const DerivedFeatures& d,
                           const std::string& name);

struct CategoryTable {
  std::vector<std::string> values;  // sorted for deterministic column order
  std::unordered_map<std::string, int> index;
};

struct RealStats {
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population; 0 for constant features
  std::size_t n_present = 0;
  double scale() const { return stddev > 1e-12 ? stddev : 1.0; }
  double z(double x) const { return (x - mean) / scale(); }
  // a column absent or constant across training rows carries no learnable
  // signal and no usable scale; it stays dead at prediction, like an unseen
  // category
  bool dead() const { return n_present == 0 || stddev <= 1e-12; }
};

struct Block {
  std::string feature;
  Treatment treatment = Treatment::Skip;
  int start = 0;
  int width = 0;
};

struct ColumnLayout {
  std::vector<Block> blocks;
  int columns = 0;
};

// Fitted lookup tables and scaling statistics; a pure function of the
// training rows it was fitted on.
struct EncoderState {
  std::vector<FeatureSpec> specs;
  std::unordered_map<std::string, CategoryTable> categories;
  std::unordered_map<std::string, RealStats> reals;
  ColumnLayout fm;
  ColumnLayout dense;
  std::vector<std::string> warnings;  // e.g. all-absent real features

  const ColumnLayout& layout(Policy p) const { return p == Policy::Fm ? fm : dense; }
};

EncoderState fit_encoder(const Transcript& t, const std::vector<std::size_t>& training_rows,
                         const std::vector<DerivedFeatures>& derived,
                         const std::vector<FeatureSpec>& specs);

// Restriction of a fitted encoder to `keep`; column indices recompacted.
EncoderState select_features(const EncoderState& state, const std::set<std::string>& keep);

struct RowMeta {
  std::string sid;
  std::string cid;
  int term_index = 0;
  Season season = Season::Fall;
  int cohort_index = 0;
  bool transfer = false;
  ColdStartClass cs = ColdStartClass::NCS;
};

// Sparse design matrix in CSR form with aligned targets and dyad metadata.
struct DesignMatrix {
  int columns = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;
  std::vector<double> target;  // NaN when the row has no grade
  std::vector<RowMeta> meta;
  std::vector<Block> blocks;

  std::size_t rows() const { return row_ptr.size() - 1; }
  std::size_t row_nnz(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }

  // Dense row-major copy (used by the dense-policy models).
  std::vector<double> to_dense() const;

  const std::string& feature_of_column(int c) const;
};

DesignMatrix encode(const Transcript& t, const std::vector<std::size_t>& rows,
                    const std::vector<DerivedFeatures>& derived, const EncoderState& state,
                    Policy policy, const std::vector<ColdStartClass>* cs = nullptr);

}  // namespace nextgrade
