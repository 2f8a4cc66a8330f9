#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nextgrade/csv_io.hpp"
#include "nextgrade/evaluate.hpp"
#include "nextgrade/synth.hpp"
#include "nextgrade/transcript.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nextgrade;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string default_out_dir() {
  const char* env = std::getenv("NEXTGRADE_OUT");
  return env ? env : "";
}

// Everything an evaluate/importance run needs, assembled from the config file
// (when given) with command-line flags taking precedence.
struct RunSettings {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string data_csv;
  SynthConfig synth;
  bool use_synth = false;
  bool data_set = false;
  std::vector<std::string> models;
  std::string out_dir;
  int threads = 1;
  bool exclude_summers = false;
  bool feature_selection = false;
  double fs_threshold = 0.001;
  std::string feature_policy_path;
  ModelHypers hypers;
};

void load_hypers(const json& j, ModelHypers& h) {
  auto get = [](const json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("fm")) {
    const auto& f = j.at("fm");
    get(f, "rank", h.fm.rank);
    get(f, "iterations", h.fm.iterations);
    get(f, "init_std", h.fm.init_std);
    get(f, "burn_in_fraction", h.fm.burn_in_fraction);
  }
  if (j.contains("svd")) {
    const auto& f = j.at("svd");
    get(f, "rank", h.svd.rank);
    get(f, "epochs", h.svd.epochs);
    get(f, "learning_rate", h.svd.learning_rate);
    get(f, "l2", h.svd.l2);
  }
  if (j.contains("rf")) {
    const auto& f = j.at("rf");
    get(f, "n_trees", h.rf.n_trees);
    get(f, "max_depth", h.rf.max_depth);
    get(f, "mtry", h.rf.mtry);
    get(f, "threads", h.rf.threads);
  }
  if (j.contains("sgd")) {
    const auto& f = j.at("sgd");
    get(f, "learning_rate", h.sgd.learning_rate);
    get(f, "l1", h.sgd.l1);
    get(f, "iterations", h.sgd.iterations);
  }
  if (j.contains("pmlr")) {
    const auto& f = j.at("pmlr");
    get(f, "k", h.pmlr.k);
    get(f, "lambda_w", h.pmlr.lambda_w);
    get(f, "lambda_b", h.pmlr.lambda_b);
    get(f, "learning_rate", h.pmlr.learning_rate);
    get(f, "lr_decay", h.pmlr.lr_decay);
    get(f, "epochs", h.pmlr.epochs);
  }
  if (j.contains("knn")) {
    const auto& f = j.at("knn");
    get(f, "k", h.knn_k);
  }
}

void load_run_config(const std::string& path, RunSettings& s) {
  const json j = json::parse(read_file(path));
  if (j.contains("seed")) {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.seed_set = true;
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (d.contains("csv")) {
      s.data_csv = d.at("csv").get<std::string>();
      s.use_synth = false;
      s.data_set = true;
    } else if (d.contains("synth")) {
      s.synth = synth_config_from_json(d.at("synth").dump());
      s.use_synth = true;
      s.data_set = true;
    }
  }
  if (j.contains("models")) s.models = j.at("models").get<std::vector<std::string>>();
  if (j.contains("out")) s.out_dir = j.at("out").get<std::string>();
  if (j.contains("threads")) s.threads = j.at("threads").get<int>();
  if (j.contains("exclude_summers")) s.exclude_summers = j.at("exclude_summers").get<bool>();
  if (j.contains("feature_selection")) {
    const auto& f = j.at("feature_selection");
    if (f.contains("enabled")) s.feature_selection = f.at("enabled").get<bool>();
    if (f.contains("threshold")) s.fs_threshold = f.at("threshold").get<double>();
  }
  if (j.contains("feature_policy")) s.feature_policy_path = j.at("feature_policy").get<std::string>();
  if (j.contains("hyper")) load_hypers(j.at("hyper"), s.hypers);
}

std::vector<ModelKind> parse_models(const std::vector<std::string>& names) {
  if (names.empty()) throw CLI::ValidationError("--models", "no models requested");
  std::vector<ModelKind> kinds;
  for (const auto& name : names) {
    const auto kind = model_from_name(name);
    if (!kind) {
      std::string valid;
      for (ModelKind k : all_models()) {
        if (!valid.empty()) valid += ", ";
        valid += model_name(k);
      }
      throw CLI::ValidationError("--models", "unknown model '" + name + "' (valid: " + valid + ")");
    }
    kinds.push_back(*kind);
  }
  return kinds;
}

Transcript load_data(const RunSettings& s, const fs::path& out_dir) {
  if (!s.data_set) throw CLI::ValidationError("--data", "no input data configured");
  if (s.use_synth) {
    SynthResult result = generate_synthetic(s.synth);
    write_transcript_csv((out_dir / "transcript.csv").string(), result.transcript);
    write_truth_json((out_dir / "truth.json").string(), result.truth, s.synth);
    return std::move(result.transcript);
  }
  if (!fs::exists(s.data_csv)) {
    throw CLI::ValidationError("--data", "input file does not exist: " + s.data_csv);
  }
  ParseResult parsed = parse_transcript_csv(s.data_csv);
  if (parsed.dropped_unmappable_grades > 0) {
    std::cerr << "note: dropped " << parsed.dropped_unmappable_grades
              << " rows with unmappable grades\n";
  }
  for (const auto& err : parsed.row_errors) std::cerr << "note: " << err << '\n';
  return std::move(parsed.transcript);
}

EvalOptions make_options(const RunSettings& s, const Transcript& data, bool collect_importance) {
  if (!s.seed_set) throw CLI::ValidationError("--seed", "a seed is mandatory");
  EvalOptions opts;
  opts.seed = s.seed;
  opts.hypers = s.hypers;
  opts.exclude_summers = s.exclude_summers;
  opts.threads = s.threads;
  opts.feature_selection = s.feature_selection;
  opts.selection_rule.threshold = s.fs_threshold;
  opts.collect_importance = collect_importance;
  opts.specs = default_feature_specs(data.extra_feature_names);
  if (!s.feature_policy_path.empty()) {
    apply_feature_policy_json(opts.specs, read_file(s.feature_policy_path));
  }
  return opts;
}

fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw CLI::ValidationError("--out", "an output directory is required");
  fs::path out(dir);
  fs::create_directories(out);
  return out;
}

std::string summary_csv(const std::vector<TermColdStartRow>& rows) {
  std::string out = "term,termnum,dyads,ncs,css,csc,csb,cs,pct_cs\n";
  for (const auto& r : rows) {
    const double pct = r.dyads > 0 ? 100.0 * static_cast<double>(r.cs()) / static_cast<double>(r.dyads) : 0.0;
    char pct_buf[16];
    std::snprintf(pct_buf, sizeof(pct_buf), "%.2f", pct);
    out += std::string(season_name(r.term.season)) + " " + std::to_string(r.term.year) + "," +
           std::to_string(r.term.index) + "," + std::to_string(r.dyads) + "," +
           std::to_string(r.ncs) + "," + std::to_string(r.css) + "," + std::to_string(r.csc) +
           "," + std::to_string(r.csb) + "," + std::to_string(r.cs()) + "," + pct_buf + "\n";
  }
  return out;
}

int cmd_synth(const std::string& config_path, SynthConfig cfg, bool seed_set, std::uint64_t seed,
              const std::string& out_dir) {
  if (!config_path.empty()) cfg = synth_config_from_json(read_file(config_path));
  if (seed_set) cfg.seed = seed;
  const fs::path out = prepare_out_dir(out_dir);
  SynthResult result = generate_synthetic(cfg);
  write_transcript_csv((out / "transcript.csv").string(), result.transcript);
  write_truth_json((out / "truth.json").string(), result.truth, cfg);
  const auto table = cold_start_by_term(result.transcript);
  write_file(out / "summary.csv", summary_csv(table));
  std::cout << "wrote " << result.transcript.records.size() << " dyads\n";
  std::cout << "term,termnum,dyads,ncs,cs,pct_cs\n";
  for (const auto& r : table) {
    const double pct = r.dyads > 0 ? 100.0 * static_cast<double>(r.cs()) / static_cast<double>(r.dyads) : 0.0;
    char line[160];
    std::snprintf(line, sizeof(line), "%s %d,%d,%zu,%zu,%zu,%.2f\n", season_name(r.term.season),
                  r.term.year, r.term.index, r.dyads, r.ncs, r.cs(), pct);
    std::cout << line;
  }
  return 0;
}

void write_model_artifacts(const fs::path& out, const std::string& name, const ModelRun& run,
                           bool exclude_summers) {
  const EvaluationReport report = segment_report(run, exclude_summers);
  write_file(out / ("predictions_" + name + ".csv"), predictions_to_csv(run));
  write_file(out / ("report_" + name + ".json"), report_to_json(report));
  write_file(out / ("segments_" + name + ".csv"), segments_to_csv(report));
  write_file(out / ("heatmap_" + name + ".csv"), heatmap_to_csv(report));
  std::cout << name << ": overall rmse "
            << (report.overall.count > 0 ? std::to_string(report.overall.rmse) : "n/a") << " over "
            << report.overall.count << " dyads\n";
}

int cmd_evaluate(const RunSettings& s) {
  const fs::path out = prepare_out_dir(s.out_dir);
  const Transcript data = load_data(s, out);
  const std::vector<ModelKind> kinds = parse_models(s.models);
  const EvalOptions opts = make_options(s, data, false);

  const EvalOutcome outcome = evaluate_models(data, kinds, opts);
  for (const auto& [kind, run] : outcome.runs) {
    write_model_artifacts(out, model_name(kind), run, opts.exclude_summers);
  }
  if (outcome.fm_selection) {
    const auto& sel = *outcome.fm_selection;
    write_model_artifacts(out, "fm_preselect", sel.all_features_run, opts.exclude_summers);
    json j;
    j["kept_features"] = std::vector<std::string>(sel.kept.begin(), sel.kept.end());
    j["threshold"] = opts.selection_rule.threshold;
    write_file(out / "selection_fm.json", j.dump(2));
    write_file(out / "importance_fm_preselect.csv", importance_to_csv(sel.importance));
  }
  return 0;
}

int cmd_importance(const RunSettings& s) {
  const fs::path out = prepare_out_dir(s.out_dir);
  const Transcript data = load_data(s, out);
  std::vector<std::string> names = s.models;
  if (names.empty()) names = {"fm", "pmlr", "rf"};
  const std::vector<ModelKind> kinds = parse_models(names);
  for (ModelKind k : kinds) {
    const bool supported = k == ModelKind::Fm || k == ModelKind::Pmlr || k == ModelKind::Rf ||
                           k == ModelKind::Sgd;
    if (!supported) {
      throw CLI::ValidationError("--models", std::string("model '") + model_name(k) +
                                                 "' has no additive importance decomposition");
    }
  }
  const EvalOptions opts = make_options(s, data, true);
  const EvalOutcome outcome = evaluate_models(data, kinds, opts);
  for (const auto& [kind, report] : outcome.importance) {
    const std::string name = model_name(kind);
    write_file(out / ("importance_" + name + ".csv"), importance_to_csv(report));
    write_file(out / ("importance_" + name + ".json"), importance_to_json(report));
    write_file(out / ("evolution_" + name + ".csv"), importance_evolution_to_csv(report));
    std::cout << "wrote importance_" << name << ".{csv,json} and evolution_" << name << ".csv\n";
  }
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_dir) {
  const fs::path out = prepare_out_dir(out_dir);
  const json j = json::parse(read_file(report_path));
  const std::string model = j.at("model").get<std::string>();

  std::string segments = "segment,count,rmse,mae,mae_std\n";
  auto add_line = [&](const std::string& name, const json& m) {
    segments += name + "," + std::to_string(m.at("count").get<std::size_t>()) + "," +
                std::to_string(m.at("rmse").get<double>()) + "," +
                std::to_string(m.at("mae").get<double>()) + "," +
                std::to_string(m.at("mae_std").get<double>()) + "\n";
  };
  add_line("overall", j.at("overall"));
  for (const auto& [name, m] : j.at("segments").items()) add_line(name, m);
  write_file(out / ("segments_" + model + ".csv"), segments);

  std::string per_term = "termnum,count,rmse,mae,mae_std\n";
  for (const auto& t : j.at("per_term")) {
    const auto& m = t.at("overall");
    per_term += std::to_string(t.at("termnum").get<int>()) + "," +
                std::to_string(m.at("count").get<std::size_t>()) + "," +
                std::to_string(m.at("rmse").get<double>()) + "," +
                std::to_string(m.at("mae").get<double>()) + "," +
                std::to_string(m.at("mae_std").get<double>()) + "\n";
  }
  write_file(out / ("per_term_" + model + ".csv"), per_term);

  const auto& hm = j.at("cohort_term_matrix");
  std::string heat = "cohort,termnum,rmse,count\n";
  const auto cohorts = hm.at("cohorts").get<std::vector<int>>();
  const auto terms = hm.at("terms").get<std::vector<int>>();
  for (std::size_t ci = 0; ci < cohorts.size(); ++ci) {
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      const auto& cell = hm.at("rmse").at(ci).at(ti);
      const auto count = hm.at("counts").at(ci).at(ti).get<std::size_t>();
      if (cell.is_null() || count == 0) continue;
      heat += std::to_string(cohorts[ci]) + "," + std::to_string(terms[ti]) + "," +
              std::to_string(cell.get<double>()) + "," + std::to_string(count) + "\n";
    }
  }
  write_file(out / ("heatmap_" + model + ".csv"), heat);
  std::cout << "re-rendered report for " << model << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"next-term grade prediction toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic transcript dataset");
  std::string synth_config, synth_out = default_out_dir();
  SynthConfig synth_cfg;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  synth->add_option("--config", synth_config, "synth config JSON file");
  synth->add_option("--out", synth_out, "output directory")->required(default_out_dir().empty());
  synth->add_option("--seed", synth_seed, "random seed")->each([&](const std::string&) {
    synth_seed_set = true;
  });
  synth->add_option("--students", synth_cfg.n_students, "total students");
  synth->add_option("--courses", synth_cfg.n_courses, "course catalog size");
  synth->add_option("--instructors", synth_cfg.n_instructors, "instructor pool size");
  synth->add_option("--terms", synth_cfg.n_terms, "number of terms");
  synth->add_option("--noise-features", synth_cfg.n_noise_features, "pure-noise categorical columns");
  synth->add_option("--noise-std", synth_cfg.noise_std, "grade noise std");
  synth->add_option("--interaction-std", synth_cfg.interaction_std, "latent interaction std");
  synth->add_option("--new-student-rate", synth_cfg.new_student_rate, "per-term arrival rate");
  synth->add_option("--transfer-fraction", synth_cfg.transfer_fraction, "transfer share of arrivals");

  // shared evaluate/importance settings
  RunSettings ev, imp;
  auto add_run_options = [&](CLI::App* cmd, RunSettings& s, std::string& config_path,
                             std::string& models_csv) {
    s.out_dir = default_out_dir();
    cmd->add_option("--config", config_path, "run-config JSON file");
    cmd->add_option("--data", s.data_csv, "transcript CSV input")->each([&s](const std::string&) {
      s.use_synth = false;
      s.data_set = true;
    });
    cmd->add_option("--synth-seed", s.synth.seed, "use the default synthetic dataset with this seed")
        ->each([&s](const std::string&) {
          s.use_synth = true;
          s.data_set = true;
        });
    cmd->add_option("--out", s.out_dir, "output directory");
    cmd->add_option("--seed", s.seed, "random seed (mandatory)")->each([&s](const std::string&) {
      s.seed_set = true;
    });
    cmd->add_option("--models", models_csv, "comma-separated model list");
    cmd->add_option("--threads", s.threads, "parallel term workers");
    cmd->add_flag("--exclude-summers", s.exclude_summers, "drop summer terms from the cohort matrix");
    cmd->add_option("--feature-policy", s.feature_policy_path, "feature policy JSON file");
  };

  auto* evaluate = app.add_subcommand("evaluate", "run the sequential per-term evaluation");
  std::string ev_config, ev_models_csv;
  add_run_options(evaluate, ev, ev_config, ev_models_csv);
  bool ev_fs = false;
  double ev_fs_threshold = -1.0;
  evaluate->add_flag("--feature-selection", ev_fs, "enable MADImp-driven FM feature selection");
  evaluate->add_option("--fs-threshold", ev_fs_threshold, "selection share threshold");

  auto* importance = app.add_subcommand("importance", "emit feature-importance reports");
  std::string imp_config, imp_models_csv;
  add_run_options(importance, imp, imp_config, imp_models_csv);

  auto* report = app.add_subcommand("report", "re-render a report JSON into CSV tables");
  std::string report_path, report_out = default_out_dir();
  report->add_option("--report", report_path, "report JSON file")->required();
  report->add_option("--out", report_out, "output directory")->required(default_out_dir().empty());

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_config, synth_cfg, synth_seed_set, synth_seed, synth_out);
    }
    if (evaluate->parsed()) {
      RunSettings s;
      if (!ev_config.empty()) load_run_config(ev_config, s);
      // flags override file values
      if (ev.seed_set) {
        s.seed = ev.seed;
        s.seed_set = true;
      }
      if (ev.data_set) {
        s.data_csv = ev.data_csv;
        s.synth.seed = ev.synth.seed;
        s.use_synth = ev.use_synth;
        s.data_set = true;
      }
      if (!ev.out_dir.empty()) s.out_dir = ev.out_dir;
      if (!ev_models_csv.empty()) s.models = split_list(ev_models_csv);
      if (evaluate->count("--threads") > 0) s.threads = ev.threads;
      if (ev.exclude_summers) s.exclude_summers = true;
      if (ev_fs) s.feature_selection = true;
      if (ev_fs_threshold >= 0.0) s.fs_threshold = ev_fs_threshold;
      if (!ev.feature_policy_path.empty()) s.feature_policy_path = ev.feature_policy_path;
      return cmd_evaluate(s);
    }
    if (importance->parsed()) {
      RunSettings s;
      if (!imp_config.empty()) load_run_config(imp_config, s);
      if (imp.seed_set) {
        s.seed = imp.seed;
        s.seed_set = true;
      }
      if (imp.data_set) {
        s.data_csv = imp.data_csv;
        s.synth.seed = imp.synth.seed;
        s.use_synth = imp.use_synth;
        s.data_set = true;
      }
      if (!imp.out_dir.empty()) s.out_dir = imp.out_dir;
      if (!imp_models_csv.empty()) s.models = split_list(imp_models_csv);
      if (importance->count("--threads") > 0) s.threads = imp.threads;
      if (!imp.feature_policy_path.empty()) s.feature_policy_path = imp.feature_policy_path;
      return cmd_importance(s);
    }
    if (report->parsed()) {
      return cmd_report(report_path, report_out);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
