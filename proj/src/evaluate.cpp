#include "nextgrade/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nextgrade/baselines.hpp"
#include "nextgrade/rng.hpp"

namespace nextgrade {

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Ur: return "ur";
    case ModelKind::Gm: return "gm";
    case ModelKind::Mom: return "mom";
    case ModelKind::Svd: return "svd";
    case ModelKind::SvdKnn: return "svdknn";
    case ModelKind::Fm: return "fm";
    case ModelKind::FmIdsOnly: return "fm-ids-only";
    case ModelKind::Knn: return "knn";
    case ModelKind::Sgd: return "sgd";
    case ModelKind::Rf: return "rf";
    case ModelKind::Pmlr: return "pmlr";
    case ModelKind::Hybrid: return "hybrid";
  }
  return "?";
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::Ur,  ModelKind::Gm,        ModelKind::Mom, ModelKind::Svd,
      ModelKind::SvdKnn, ModelKind::Fm,     ModelKind::FmIdsOnly, ModelKind::Knn,
      ModelKind::Sgd, ModelKind::Rf,        ModelKind::Pmlr, ModelKind::Hybrid};
  return kinds;
}

std::optional<ModelKind> model_from_name(const std::string& name) {
  for (ModelKind kind : all_models()) {
    if (name == model_name(kind)) return kind;
  }
  return std::nullopt;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TermData {
  int term_index = 0;
  Season season = Season::Fall;
  Transcript slice;
  std::vector<DerivedFeatures> derived;
  std::vector<std::size_t> train_rows;  // graded rows before the term
  std::vector<std::size_t> test_rows;   // the term's rows
  std::vector<ColdStartClass> test_cs;
  double train_mean = 0.0;

  bool has_encoder = false;
  EncoderState encoder;

  bool has_fm = false;
  DesignMatrix fm_train, fm_test;

  bool has_dense = false;
  DesignMatrix dn_train, dn_test;
  std::vector<double> dn_train_rows, dn_test_rows;

  bool has_triplets = false;
  std::vector<GradedDyad> triplets;

  bool has_svd = false;
  SvdModel svd;
};

TermData build_term_data(const Transcript& data, int term) {
  TermData td;
  td.term_index = term;
  td.slice.extra_feature_names = data.extra_feature_names;
  for (const auto& r : data.records) {
    if (r.term.index <= term) td.slice.records.push_back(r);
  }
  td.derived = derive_features(td.slice, term);

  double mean = 0.0;
  std::size_t graded = 0;
  for (std::size_t i = 0; i < td.slice.records.size(); ++i) {
    const auto& r = td.slice.records[i];
    if (r.term.index == term) {
      td.season = r.term.season;
      td.test_rows.push_back(i);
    } else if (r.grade) {
      td.train_rows.push_back(i);
      mean += *r.grade;
      ++graded;
    }
  }
  td.train_mean = graded > 0 ? mean / static_cast<double>(graded) : 0.0;

  const SeenSets seen = collect_seen(td.slice, term);
  td.test_cs.reserve(td.test_rows.size());
  for (std::size_t i : td.test_rows) {
    td.test_cs.push_back(classify_cold_start(td.slice.records[i], seen));
  }
  return td;
}

void require_history(const TermData& td) {
  if (td.train_rows.empty()) {
    throw std::invalid_argument("no graded training history before this term");
  }
}

const EncoderState& ensure_encoder(TermData& td, const std::vector<FeatureSpec>& specs) {
  if (!td.has_encoder) {
    require_history(td);
    td.encoder = fit_encoder(td.slice, td.train_rows, td.derived, specs);
    td.has_encoder = true;
  }
  return td.encoder;
}

void ensure_fm(TermData& td, const std::vector<FeatureSpec>& specs) {
  if (td.has_fm) return;
  const EncoderState& enc = ensure_encoder(td, specs);
  td.fm_train = encode(td.slice, td.train_rows, td.derived, enc, Policy::Fm);
  td.fm_test = encode(td.slice, td.test_rows, td.derived, enc, Policy::Fm, &td.test_cs);
  td.has_fm = true;
}

void ensure_dense(TermData& td, const std::vector<FeatureSpec>& specs) {
  if (td.has_dense) return;
  const EncoderState& enc = ensure_encoder(td, specs);
  td.dn_train = encode(td.slice, td.train_rows, td.derived, enc, Policy::Dense);
  td.dn_test = encode(td.slice, td.test_rows, td.derived, enc, Policy::Dense, &td.test_cs);
  td.dn_train_rows = td.dn_train.to_dense();
  td.dn_test_rows = td.dn_test.to_dense();
  td.has_dense = true;
}

void ensure_triplets(TermData& td) {
  if (td.has_triplets) return;
  require_history(td);
  td.triplets.reserve(td.train_rows.size());
  for (std::size_t i : td.train_rows) {
    const auto& r = td.slice.records[i];
    td.triplets.push_back({r.sid, r.cid, *r.grade});
  }
  td.has_triplets = true;
}

const SvdModel& ensure_svd(TermData& td, const SvdConfig& cfg, std::uint64_t seed) {
  if (!td.has_svd) {
    ensure_triplets(td);
    td.svd = svd_fit(td.triplets, cfg, seed_for(seed, "svd", static_cast<std::uint64_t>(td.term_index)));
    td.has_svd = true;
  }
  return td.svd;
}

TermRun make_run(const TermData& td, const std::vector<double>& raw) {
  TermRun run;
  run.term_index = td.term_index;
  run.season = td.season;
  run.predictions.reserve(td.test_rows.size());
  for (std::size_t i = 0; i < td.test_rows.size(); ++i) {
    const auto& r = td.slice.records[td.test_rows[i]];
    DyadPrediction p;
    p.sid = r.sid;
    p.cid = r.cid;
    p.truth = r.grade ? *r.grade : kNaN;
    p.raw = raw[i];
    p.clipped = clip_prediction(raw[i]);
    p.cs = td.test_cs[i];
    p.transfer = r.transfer;
    p.cohort_index = td.derived[td.test_rows[i]].cohort_index;
    run.predictions.push_back(std::move(p));
  }
  return run;
}

// Column index -> block ordinal plus block names, for importance keys.
std::pair<std::vector<int>, std::vector<std::string>> block_keys(const DesignMatrix& m) {
  std::vector<int> col_to_key(m.columns, 0);
  std::vector<std::string> names;
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    names.push_back(m.blocks[b].feature);
    for (int c = m.blocks[b].start; c < m.blocks[b].start + m.blocks[b].width; ++c) {
      col_to_key[c] = static_cast<int>(b);
    }
  }
  return {std::move(col_to_key), std::move(names)};
}

TermImportance entries_from_accumulator(const MadimpAccumulator& acc,
                                        const std::vector<std::string>& names, int term,
                                        double weight) {
  TermImportance ti;
  ti.term_index = term;
  ti.weight = weight;
  const auto share = acc.mean_share();
  const auto s1 = acc.mean_share_1way();
  const auto s2 = acc.mean_share_2way();
  for (std::size_t k = 0; k < names.size(); ++k) {
    ti.entries.push_back({names[k], share[k], s1[k], s2[k]});
  }
  return ti;
}

struct TermOutcome {
  std::optional<TermRun> run;
  std::optional<TermSkip> skip;
  std::optional<TermImportance> importance;
};

struct Job {
  ModelKind kind;
  bool collect_importance = false;
  std::set<std::string> fm_keep;  // when non-empty, restrict the FM encoder
};

TermOutcome run_one(TermData& td, const Job& job, const EvalOptions& opts) {
  const std::uint64_t t = static_cast<std::uint64_t>(td.term_index);
  TermOutcome out;
  try {
    switch (job.kind) {
      case ModelKind::Ur: {
        out.run = make_run(td, ur_predict(td.test_rows.size(), seed_for(opts.seed, "ur", t)));
        break;
      }
      case ModelKind::Gm: {
        ensure_triplets(td);
        const MeansModel m = means_fit(td.triplets);
        out.run = make_run(td, std::vector<double>(td.test_rows.size(), gm_predict(m)));
        break;
      }
      case ModelKind::Mom: {
        ensure_triplets(td);
        const MeansModel m = means_fit(td.triplets);
        std::vector<double> raw(td.test_rows.size());
        for (std::size_t i = 0; i < td.test_rows.size(); ++i) {
          const auto& r = td.slice.records[td.test_rows[i]];
          raw[i] = mom_predict(m, r.sid, r.cid);
        }
        out.run = make_run(td, raw);
        break;
      }
      case ModelKind::Svd:
      case ModelKind::SvdKnn: {
        const SvdModel& m = ensure_svd(td, opts.hypers.svd, opts.seed);
        std::vector<double> raw(td.test_rows.size());
        for (std::size_t i = 0; i < td.test_rows.size(); ++i) {
          const auto& r = td.slice.records[td.test_rows[i]];
          const auto pred = job.kind == ModelKind::Svd ? svd_predict(m, r.sid, r.cid)
                                                       : svdknn_predict(m, r.sid, r.cid);
          // pure CF cannot score cold-start dyads; fall back to the training mean
          raw[i] = pred ? *pred : td.train_mean;
        }
        out.run = make_run(td, raw);
        break;
      }
      case ModelKind::Fm:
      case ModelKind::FmIdsOnly: {
        ensure_fm(td, opts.specs);
        const DesignMatrix* train = &td.fm_train;
        const DesignMatrix* test = &td.fm_test;
        DesignMatrix r_train, r_test;
        const bool ids_only = job.kind == ModelKind::FmIdsOnly;
        if (ids_only || !job.fm_keep.empty()) {
          const std::set<std::string> keep =
              ids_only ? std::set<std::string>{"sid", "cid"} : job.fm_keep;
          const EncoderState restricted = select_features(td.encoder, keep);
          r_train = encode(td.slice, td.train_rows, td.derived, restricted, Policy::Fm);
          r_test = encode(td.slice, td.test_rows, td.derived, restricted, Policy::Fm, &td.test_cs);
          train = &r_train;
          test = &r_test;
        }
        const FmFit fit = fm_fit(*train, opts.hypers.fm,
                                 seed_for(opts.seed, model_name(job.kind), t), test);
        out.run = make_run(td, fit.test_predictions);
        if (job.collect_importance) {
          auto [col_to_key, names] = block_keys(*train);
          MadimpAccumulator acc(names.size());
          for (std::size_t i = 0; i < train->rows(); ++i) {
            acc.add(fm_decompose(fit.model, train->col.data() + train->row_ptr[i],
                                 train->val.data() + train->row_ptr[i], train->row_nnz(i),
                                 col_to_key));
          }
          out.importance = entries_from_accumulator(acc, names, td.term_index,
                                                    static_cast<double>(td.test_rows.size()));
        }
        break;
      }
      case ModelKind::Knn: {
        ensure_dense(td, opts.specs);
        const NeighborModel m = knn_fit(td.dn_train_rows, td.dn_train.target,
                                        static_cast<std::size_t>(td.dn_train.columns),
                                        opts.hypers.knn_k);
        out.run = make_run(td, knn_predict_all(m, td.dn_test_rows, td.test_rows.size()));
        break;
      }
      case ModelKind::Sgd: {
        ensure_dense(td, opts.specs);
        const LinearModel m =
            sgd_fit(td.dn_train_rows, td.dn_train.target,
                    static_cast<std::size_t>(td.dn_train.columns), opts.hypers.sgd,
                    seed_for(opts.seed, "sgd", t));
        std::vector<double> raw(td.test_rows.size());
        for (std::size_t i = 0; i < td.test_rows.size(); ++i) {
          raw[i] = linear_predict(m, td.dn_test_rows.data() + i * td.dn_test.columns);
        }
        out.run = make_run(td, raw);
        break;
      }
      case ModelKind::Rf: {
        ensure_dense(td, opts.specs);
        const ForestModel m =
            rf_fit(td.dn_train_rows, td.dn_train.target,
                   static_cast<std::size_t>(td.dn_train.columns), opts.hypers.rf,
                   seed_for(opts.seed, "rf", t));
        out.run = make_run(td, rf_predict_all(m, td.dn_test_rows, td.test_rows.size()));
        if (job.collect_importance) {
          auto [col_to_key, names] = block_keys(td.dn_train);
          GiniTermInput input;
          input.forest = &m;
          input.col_to_key = std::move(col_to_key);
          input.key_names = std::move(names);
          input.term_index = td.term_index;
          input.weight = static_cast<double>(td.test_rows.size());
          out.importance = gini_importance({input}).per_term.front();
        }
        break;
      }
      case ModelKind::Pmlr: {
        ensure_dense(td, opts.specs);
        std::vector<PmlrSample> dyads(td.train_rows.size());
        for (std::size_t i = 0; i < td.train_rows.size(); ++i) {
          const auto& r = td.slice.records[td.train_rows[i]];
          dyads[i] = {r.sid, r.cid};
        }
        const PmlrModel m = pmlr_fit(td.dn_train_rows, td.dn_train.target,
                                     static_cast<std::size_t>(td.dn_train.columns), dyads,
                                     opts.hypers.pmlr, seed_for(opts.seed, "pmlr", t));
        std::vector<double> raw(td.test_rows.size());
        for (std::size_t i = 0; i < td.test_rows.size(); ++i) {
          const auto& r = td.slice.records[td.test_rows[i]];
          raw[i] = pmlr_predict(m, r.sid, r.cid, td.dn_test_rows.data() + i * td.dn_test.columns);
        }
        out.run = make_run(td, raw);
        if (job.collect_importance) {
          auto [col_to_key, names] = block_keys(td.dn_train);
          const int sid_key = static_cast<int>(names.size());
          const int cid_key = sid_key + 1;
          names.push_back("sid");
          names.push_back("cid");
          MadimpAccumulator acc(names.size());
          for (std::size_t i = 0; i < td.train_rows.size(); ++i) {
            acc.add(pmlr_decompose(m, dyads[i].sid, dyads[i].cid,
                                   td.dn_train_rows.data() + i * td.dn_train.columns, col_to_key,
                                   sid_key, cid_key));
          }
          out.importance = entries_from_accumulator(acc, names, td.term_index,
                                                    static_cast<double>(td.test_rows.size()));
        }
        break;
      }
      case ModelKind::Hybrid:
        throw std::logic_error("hybrid is assembled from fm and rf runs");
    }
  } catch (const std::exception& e) {
    out.run.reset();
    out.skip = TermSkip{td.term_index, e.what()};
  }
  return out;
}

std::vector<int> prediction_terms(const Transcript& data) {
  std::set<int> terms;
  for (const auto& r : data.records) terms.insert(r.term.index);
  std::vector<int> out;
  for (int t : terms) {
    if (t >= 1) out.push_back(t);
  }
  return out;
}

// Runs every job over every term, term-parallel.
std::vector<std::vector<TermOutcome>> run_grid(const Transcript& data,
                                               const std::vector<int>& terms,
                                               const std::vector<Job>& jobs,
                                               const EvalOptions& opts) {
  std::vector<std::vector<TermOutcome>> grid(terms.size());
  auto work = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      TermData td = build_term_data(data, terms[i]);
      grid[i].resize(jobs.size());
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        grid[i][j] = run_one(td, jobs[j], opts);
      }
    }
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || terms.size() <= 1) {
    work(0, terms.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (terms.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::size_t from = w * per;
      const std::size_t to = std::min(terms.size(), from + per);
      if (from < to) pool.emplace_back(work, from, to);
    }
    for (auto& th : pool) th.join();
  }
  return grid;
}

ModelRun collect_run(ModelKind kind, const std::vector<std::vector<TermOutcome>>& grid,
                     std::size_t job_index) {
  ModelRun run;
  run.model = kind;
  for (const auto& term : grid) {
    const TermOutcome& out = term[job_index];
    if (out.run) run.runs.push_back(*out.run);
    if (out.skip) run.skipped.push_back(*out.skip);
  }
  return run;
}

std::vector<TermImportance> collect_importance(const std::vector<std::vector<TermOutcome>>& grid,
                                               std::size_t job_index) {
  std::vector<TermImportance> out;
  for (const auto& term : grid) {
    if (term[job_index].importance) out.push_back(*term[job_index].importance);
  }
  return out;
}

}  // namespace

EvalOutcome evaluate_models(const Transcript& data, const std::vector<ModelKind>& models,
                            const EvalOptions& opts) {
  if (models.empty()) throw std::invalid_argument("evaluate_models: no models requested");
  const std::vector<int> terms = prediction_terms(data);
  if (terms.empty()) throw std::invalid_argument("evaluate_models: dataset spans fewer than 2 terms");

  EvalOptions options = opts;
  if (options.specs.empty()) options.specs = default_feature_specs(data.extra_feature_names);

  // primitive set; hybrid pulls in its parents
  std::vector<ModelKind> primitives;
  bool want_hybrid = false;
  auto add = [&](ModelKind k) {
    if (std::find(primitives.begin(), primitives.end(), k) == primitives.end()) primitives.push_back(k);
  };
  for (ModelKind k : models) {
    if (k == ModelKind::Hybrid) {
      want_hybrid = true;
      add(ModelKind::Fm);
      add(ModelKind::Rf);
    } else {
      add(k);
    }
  }

  std::vector<Job> jobs;
  for (ModelKind k : primitives) {
    Job job;
    job.kind = k;
    const bool madimp_model = k == ModelKind::Fm || k == ModelKind::Pmlr;
    const bool gini_model = k == ModelKind::Rf;
    job.collect_importance = (options.collect_importance && (madimp_model || gini_model)) ||
                             (options.feature_selection && k == ModelKind::Fm);
    jobs.push_back(job);
  }

  const auto grid = run_grid(data, terms, jobs, options);

  EvalOutcome outcome;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    outcome.runs[jobs[j].kind] = collect_run(jobs[j].kind, grid, j);
    if (jobs[j].collect_importance) {
      auto per_term = collect_importance(grid, j);
      if (!per_term.empty()) {
        outcome.importance[jobs[j].kind] = aggregate_importance(std::move(per_term));
      }
    }
  }

  if (options.feature_selection && outcome.importance.count(ModelKind::Fm)) {
    FmSelectionInfo info;
    info.importance = outcome.importance.at(ModelKind::Fm);
    info.kept = madimp_select(info.importance.aggregate, options.selection_rule);
    info.all_features_run = outcome.runs.at(ModelKind::Fm);

    Job selected;
    selected.kind = ModelKind::Fm;
    selected.fm_keep = info.kept;
    const auto grid2 = run_grid(data, terms, {selected}, options);
    outcome.runs[ModelKind::Fm] = collect_run(ModelKind::Fm, grid2, 0);
    outcome.fm_selection = std::move(info);
  }

  if (want_hybrid) {
    outcome.runs[ModelKind::Hybrid] =
        hybrid_fm_rf(outcome.runs.at(ModelKind::Fm), outcome.runs.at(ModelKind::Rf));
  }
  return outcome;
}

std::pair<ModelRun, EvaluationReport> sequential_evaluate(const Transcript& data, ModelKind model,
                                                          const EvalOptions& opts) {
  EvalOutcome outcome = evaluate_models(data, {model}, opts);
  ModelRun run = std::move(outcome.runs.at(model));
  EvaluationReport report = segment_report(run, opts.exclude_summers);
  return {std::move(run), std::move(report)};
}

ModelRun hybrid_fm_rf(const ModelRun& fm, const ModelRun& rf) {
  std::vector<std::string> mismatches;
  if (fm.runs.size() != rf.runs.size()) {
    mismatches.push_back("term coverage differs: fm has " + std::to_string(fm.runs.size()) +
                         " terms, rf has " + std::to_string(rf.runs.size()));
  }
  ModelRun hybrid;
  hybrid.model = ModelKind::Hybrid;
  for (std::size_t t = 0; t < fm.runs.size() && mismatches.empty(); ++t) {
    const TermRun& f = fm.runs[t];
    const TermRun& r = rf.runs[t];
    if (f.term_index != r.term_index || f.predictions.size() != r.predictions.size()) {
      mismatches.push_back("term " + std::to_string(f.term_index) + " dyad coverage differs");
      break;
    }
    TermRun merged;
    merged.term_index = f.term_index;
    merged.season = f.season;
    merged.predictions.reserve(f.predictions.size());
    for (std::size_t i = 0; i < f.predictions.size(); ++i) {
      const DyadPrediction& a = f.predictions[i];
      const DyadPrediction& b = r.predictions[i];
      if (a.sid != b.sid || a.cid != b.cid) {
        if (mismatches.size() < 10) {
          mismatches.push_back("term " + std::to_string(f.term_index) + ": fm dyad (" + a.sid +
                               "," + a.cid + ") vs rf dyad (" + b.sid + "," + b.cid + ")");
        }
        continue;
      }
      // RF covers the dyads lacking prior student information
      const bool use_rf = a.cs == ColdStartClass::CSS || a.cs == ColdStartClass::CSB;
      merged.predictions.push_back(use_rf ? b : a);
    }
    if (mismatches.empty()) hybrid.runs.push_back(std::move(merged));
  }
  if (!mismatches.empty()) {
    std::string msg = "hybrid_fm_rf: dyad coverage mismatch:";
    for (const auto& m : mismatches) msg += "\n  " + m;
    throw std::invalid_argument(msg);
  }
  hybrid.skipped = fm.skipped;
  for (const auto& s : rf.skipped) {
    const bool dup = std::any_of(hybrid.skipped.begin(), hybrid.skipped.end(),
                                 [&](const TermSkip& x) { return x.term_index == s.term_index; });
    if (!dup) hybrid.skipped.push_back(s);
  }
  return hybrid;
}

namespace {

void add_pair(std::map<std::string, std::vector<PredictionPair>>& segments, const std::string& name,
              double truth, double pred) {
  segments[name].push_back({truth, pred});
}

std::map<std::string, Metrics> segment_metrics(
    const std::map<std::string, std::vector<PredictionPair>>& segments) {
  std::map<std::string, Metrics> out;
  for (const auto& [name, pairs] : segments) {
    if (!pairs.empty()) out[name] = compute_metrics(pairs);
  }
  return out;
}

}  // namespace

EvaluationReport segment_report(const ModelRun& run, bool exclude_summers) {
  if (run.runs.empty() && run.skipped.empty()) {
    throw std::invalid_argument("segment_report: empty run");
  }
  EvaluationReport report;
  report.model = model_name(run.model);
  report.exclude_summers = exclude_summers;
  report.skipped = run.skipped;

  std::vector<PredictionPair> overall;
  std::map<std::string, std::vector<PredictionPair>> segments;
  std::map<std::pair<int, int>, std::vector<PredictionPair>> cells;  // (cohort, term)

  for (const TermRun& term : run.runs) {
    std::vector<PredictionPair> term_overall;
    std::map<std::string, std::vector<PredictionPair>> term_segments;
    for (const DyadPrediction& p : term.predictions) {
      if (std::isnan(p.truth)) continue;
      const PredictionPair pair{p.truth, p.clipped};
      overall.push_back(pair);
      term_overall.push_back(pair);
      const std::string cs = cold_start_name(p.cs);
      std::string cs_lower;
      for (char c : cs) cs_lower += static_cast<char>(std::tolower(c));
      add_pair(segments, cs_lower, p.truth, p.clipped);
      add_pair(term_segments, cs_lower, p.truth, p.clipped);
      if (p.cs != ColdStartClass::NCS) {
        add_pair(segments, "cs", p.truth, p.clipped);
        add_pair(term_segments, "cs", p.truth, p.clipped);
      }
      const char* pop = p.transfer ? "transfer" : "native";
      add_pair(segments, pop, p.truth, p.clipped);
      add_pair(term_segments, pop, p.truth, p.clipped);

      if (!p.transfer && (!exclude_summers || term.season != Season::Summer)) {
        cells[{p.cohort_index, term.term_index}].push_back(pair);
      }
    }
    if (!term_overall.empty()) {
      EvaluationReport::PerTerm pt;
      pt.term_index = term.term_index;
      pt.overall = compute_metrics(term_overall);
      pt.segments = segment_metrics(term_segments);
      report.per_term.push_back(std::move(pt));
    }
  }

  if (!overall.empty()) {
    report.overall = compute_metrics(overall);
    report.segments = segment_metrics(segments);
  }

  std::set<int> cohorts, terms;
  for (const auto& [key, _] : cells) {
    cohorts.insert(key.first);
    terms.insert(key.second);
  }
  report.cohorts.assign(cohorts.begin(), cohorts.end());
  report.terms.assign(terms.begin(), terms.end());
  report.rmse.assign(report.cohorts.size(), std::vector<double>(report.terms.size(), kNaN));
  report.counts.assign(report.cohorts.size(), std::vector<std::size_t>(report.terms.size(), 0));
  for (std::size_t ci = 0; ci < report.cohorts.size(); ++ci) {
    for (std::size_t ti = 0; ti < report.terms.size(); ++ti) {
      auto it = cells.find({report.cohorts[ci], report.terms[ti]});
      if (it == cells.end()) continue;
      const Metrics m = compute_metrics(it->second);
      report.rmse[ci][ti] = m.rmse;
      report.counts[ci][ti] = m.count;
    }
  }
  return report;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"count", m.count}, {"rmse", m.rmse}, {"mae", m.mae}, {"mae_std", m.mae_std}};
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["model"] = report.model;
  j["overall"] = metrics_json(report.overall);
  nlohmann::json segs = nlohmann::json::object();
  for (const auto& [name, m] : report.segments) segs[name] = metrics_json(m);
  j["segments"] = std::move(segs);
  j["per_term"] = nlohmann::json::array();
  for (const auto& pt : report.per_term) {
    nlohmann::json jt{{"termnum", pt.term_index}, {"overall", metrics_json(pt.overall)}};
    nlohmann::json ts = nlohmann::json::object();
    for (const auto& [name, m] : pt.segments) ts[name] = metrics_json(m);
    jt["segments"] = std::move(ts);
    j["per_term"].push_back(std::move(jt));
  }
  j["skipped_terms"] = nlohmann::json::array();
  for (const auto& s : report.skipped) {
    j["skipped_terms"].push_back({{"termnum", s.term_index}, {"reason", s.reason}});
  }
  nlohmann::json hm;
  hm["exclude_summers"] = report.exclude_summers;
  hm["native_only"] = true;
  hm["cohorts"] = report.cohorts;
  hm["terms"] = report.terms;
  nlohmann::json rmse = nlohmann::json::array();
  for (const auto& row : report.rmse) {
    nlohmann::json jr = nlohmann::json::array();
    for (double v : row) {
      if (std::isnan(v)) {
        jr.push_back(nullptr);
      } else {
        jr.push_back(v);
      }
    }
    rmse.push_back(std::move(jr));
  }
  hm["rmse"] = std::move(rmse);
  hm["counts"] = report.counts;
  j["cohort_term_matrix"] = std::move(hm);
  return j.dump(2);
}

std::string predictions_to_csv(const ModelRun& run) {
  std::string out = "sid,cid,termnum,true,raw,clipped,cs_class,transfer,cohort\n";
  for (const TermRun& term : run.runs) {
    for (const DyadPrediction& p : term.predictions) {
      out += p.sid + "," + p.cid + "," + std::to_string(term.term_index) + ",";
      out += std::isnan(p.truth) ? std::string() : fmt17(p.truth);
      out += "," + fmt17(p.raw) + "," + fmt17(p.clipped) + "," + cold_start_name(p.cs) + "," +
             (p.transfer ? "1" : "0") + "," + std::to_string(p.cohort_index) + "\n";
    }
  }
  return out;
}

std::string segments_to_csv(const EvaluationReport& report) {
  std::string out = "segment,count,rmse,mae,mae_std\n";
  auto line = [&](const std::string& name, const Metrics& m) {
    out += name + "," + std::to_string(m.count) + "," + fmt17(m.rmse) + "," + fmt17(m.mae) + "," +
           fmt17(m.mae_std) + "\n";
  };
  line("overall", report.overall);
  for (const auto& [name, m] : report.segments) line(name, m);
  return out;
}

std::string heatmap_to_csv(const EvaluationReport& report) {
  std::string out = "cohort,termnum,rmse,count\n";
  for (std::size_t ci = 0; ci < report.cohorts.size(); ++ci) {
    for (std::size_t ti = 0; ti < report.terms.size(); ++ti) {
      if (report.counts[ci][ti] == 0) continue;
      out += std::to_string(report.cohorts[ci]) + "," + std::to_string(report.terms[ti]) + "," +
             fmt17(report.rmse[ci][ti]) + "," + std::to_string(report.counts[ci][ti]) + "\n";
    }
  }
  return out;
}

}  // namespace nextgrade
