#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nextgrade/encoder.hpp"
#include "nextgrade/fm.hpp"
#include "nextgrade/forest.hpp"
#include "nextgrade/importance.hpp"
#include "nextgrade/knn.hpp"
#include "nextgrade/linear_sgd.hpp"
#include "nextgrade/metrics.hpp"
#include "nextgrade/pmlr.hpp"
#include "nextgrade/svd.hpp"
#include "nextgrade/transcript.hpp"

namespace nextgrade {

enum class ModelKind { Ur, Gm, Mom, Svd, SvdKnn, Fm, FmIdsOnly, Knn, Sgd, Rf, Pmlr, Hybrid };

const char* model_name(ModelKind kind);
std::optional<ModelKind> model_from_name(const std::string& name);
const std::vector<ModelKind>& all_models();

struct ModelHypers {
  FmConfig fm;
  SvdConfig svd;
  ForestConfig rf;
  SgdConfig sgd;
  PmlrConfig pmlr;
  int knn_k = 20;
};

struct DyadPrediction {
  std::string sid;
  std::string cid;
  double truth = 0.0;  // NaN for prediction-only rows
  double raw = 0.0;
  double clipped = 0.0;
  ColdStartClass cs = ColdStartClass::NCS;
  bool transfer = false;
  int cohort_index = 0;
};

// One prediction term: the model was fitted on strictly earlier terms and
// scored every dyad of this term.
struct TermRun {
  int term_index = 0;
  Season season = Season::Fall;
  std::vector<DyadPrediction> predictions;
};

struct TermSkip {
  int term_index = 0;
  std::string reason;
};

struct ModelRun {
  ModelKind model = ModelKind::Gm;
  std::vector<TermRun> runs;       // ascending term order
  std::vector<TermSkip> skipped;
};

struct EvaluationReport {
  std::string model;
  Metrics overall;
  std::map<std::string, Metrics> segments;  // ncs/cs/css/csc/csb/native/transfer, absent omitted
  struct PerTerm {
    int term_index = 0;
    Metrics overall;
    std::map<std::string, Metrics> segments;
  };
  std::vector<PerTerm> per_term;
  std::vector<TermSkip> skipped;

  // cohort x term RMSE/count matrices over native students
  bool exclude_summers = false;
  std::vector<int> cohorts;
  std::vector<int> terms;
  std::vector<std::vector<double>> rmse;         // NaN for empty cells
  std::vector<std::vector<std::size_t>> counts;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  ModelHypers hypers;
  bool exclude_summers = false;
  int threads = 1;
  bool feature_selection = false;  // MADImp-driven FM feature selection
  SelectionRule selection_rule;
  bool collect_importance = false;
  std::vector<FeatureSpec> specs;  // empty = default table for the dataset
};

struct FmSelectionInfo {
  std::set<std::string> kept;
  ImportanceReport importance;       // all-features MADImp driving the selection
  ModelRun all_features_run;
};

struct EvalOutcome {
  std::map<ModelKind, ModelRun> runs;
  std::optional<FmSelectionInfo> fm_selection;
  // collected when requested: madimp for fm/pmlr (and sgd), gini for rf
  std::map<ModelKind, ImportanceReport> importance;
};

// Leakage-safe sequential loop: for every term t >= 1 present in the data,
// fit on terms < t and predict term t; term 0 is training-only. Predictions
// for a term are a pure function of (records with term <= t, model spec,
// seed). Models whose fit rejects a term (e.g. empty history) skip it with a
// recorded warning. Hybrid entries route each dyad to RF for CSS/CSB and FM
// otherwise, and require both parents in the model list.
EvalOutcome evaluate_models(const Transcript& data, const std::vector<ModelKind>& models,
                            const EvalOptions& opts);

// Single-model convenience wrapper.
std::pair<ModelRun, EvaluationReport> sequential_evaluate(const Transcript& data, ModelKind model,
                                                          const EvalOptions& opts);

// Merges per-dyad predictions of completed FM and RF runs; rejects coverage
// mismatches listing the offending dyads.
ModelRun hybrid_fm_rf(const ModelRun& fm, const ModelRun& rf);

EvaluationReport segment_report(const ModelRun& run, bool exclude_summers);

std::string report_to_json(const EvaluationReport& report);
std::string predictions_to_csv(const ModelRun& run);
std::string segments_to_csv(const EvaluationReport& report);
std::string heatmap_to_csv(const EvaluationReport& report);

}  // namespace nextgrade
