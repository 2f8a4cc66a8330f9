#include "nextgrade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nextgrade/rng.hpp"

namespace nextgrade {

using nlohmann::json;

void SynthConfig::validate() const {
  if (n_students <= 0 || n_courses <= 0 || n_instructors <= 0) {
    throw std::invalid_argument("synth config: entity counts must be positive");
  }
  if (n_terms < 1) throw std::invalid_argument("synth config: n_terms must be >= 1");
  if (latent_rank < 1) throw std::invalid_argument("synth config: latent_rank must be >= 1");
  for (double rate : {transfer_fraction, new_student_rate}) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("synth config: rates must lie in [0,1]");
  }
  for (double s : {bias_std_student, bias_std_course, bias_std_instructor, interaction_std,
                   noise_std, content_strength, transfer_noise_scale}) {
    if (s < 0.0) throw std::invalid_argument("synth config: std parameters must be non-negative");
  }
  if (n_noise_features < 0) throw std::invalid_argument("synth config: n_noise_features must be >= 0");
  const int per_term = static_cast<int>(std::lround(new_student_rate * n_students));
  if (n_students - per_term * (n_terms - 1) < 1) {
    throw std::invalid_argument("synth config: new_student_rate leaves no initial cohort");
  }
}

namespace {

struct Student {
  std::string id;
  int arrival = 0;
  bool transfer = false;
  double bias = 0.0;  // includes the content-step component
  std::vector<double> factors;
  double hsgpa = 0.0;
  double sat = 0.0;
  double age = 0.0;
  std::string major, race, sex, zip, hs, institution;
  std::vector<int> taken;  // course indices, in enrollment order
};

struct Course {
  std::string id;
  int debut = 0;
  double bias = 0.0;
  std::vector<double> factors;
  std::string cdisc;
  double chrs = 3.0;
  int clevel = 1;
  double popularity = 1.0;  // lognormal enrollment weight
  std::vector<int> instructors;  // home instructor pool indices
};

struct Instructor {
  std::string id;
  double bias = 0.0;
  std::string iclass, irank, itenure;
};

std::string tagged(const char* prefix, int i, int width) {
  std::string num = std::to_string(i);
  while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
  return prefix + num;
}

double content_step(double hsgpa) {
  if (hsgpa >= 3.3) return 0.5;
  if (hsgpa <= 2.7) return -0.5;
  return 0.0;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SynthConfig default_synth_config() { return SynthConfig{}; }

SynthResult generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  const int k = cfg.latent_rank;
  // per-dimension factor scale so that Var(u . v) = interaction_std^2
  const double factor_std = std::pow(cfg.interaction_std * cfg.interaction_std /
                                         static_cast<double>(k),
                                     0.25);

  const std::vector<std::string> iclass_pool = {"Adjunct", "FullTime", "PartTime", "GRA", "GTA"};
  const std::vector<std::string> irank_pool = {"Instructor", "AsstProf", "AssocProf",
                                               "EminentScholar", "UnivProf"};
  const std::vector<std::string> itenure_pool = {"Term", "TenureTrack", "Tenured"};
  const int n_majors = 12, n_races = 6, n_zips = 40, n_hs = 50, n_institutions = 30;
  const int n_disc = std::max(3, cfg.n_courses / 10);

  std::vector<Instructor> instructors(cfg.n_instructors);
  for (int i = 0; i < cfg.n_instructors; ++i) {
    auto& in = instructors[i];
    in.id = tagged("i", i, 3);
    in.bias = rng.normal(0.0, cfg.bias_std_instructor);
    in.iclass = iclass_pool[rng.index(iclass_pool.size())];
    in.irank = irank_pool[rng.index(irank_pool.size())];
    in.itenure = itenure_pool[rng.index(itenure_pool.size())];
  }

  std::vector<Course> courses(cfg.n_courses);
  const int late_debuts = cfg.n_terms > 1 ? cfg.n_courses * 15 / 100 : 0;
  for (int j = 0; j < cfg.n_courses; ++j) {
    auto& c = courses[j];
    c.id = tagged("c", j, 3);
    // the last 15% of the catalog debuts after term 0, spread over the terms
    if (j >= cfg.n_courses - late_debuts) {
      c.debut = 1 + (j - (cfg.n_courses - late_debuts)) % (cfg.n_terms - 1);
    }
    c.bias = rng.normal(0.0, cfg.bias_std_course);
    c.factors.resize(k);
    for (double& f : c.factors) f = rng.normal(0.0, factor_std);
    c.cdisc = tagged("DISC", j % n_disc, 2);
    const double u = rng.uniform();
    c.chrs = u < 0.8 ? 3.0 : (u < 0.9 ? 4.0 : 1.0);
    c.clevel = 1 + static_cast<int>(rng.index(7));
    // enrollment heterogeneity: intro courses dwarf seminars, so within-term
    // enrollment spread stays large relative to cross-term growth
    c.popularity = std::exp(rng.normal(0.0, 0.9));
    const int n_home = 1 + static_cast<int>(rng.index(3));
    for (int h = 0; h < n_home; ++h) {
      c.instructors.push_back(static_cast<int>(rng.index(instructors.size())));
    }
  }

  // Per-term arrival counts: term 0 gets the remainder; later terms receive
  // round(rate * n_students) arrivals weighted by season (summer arrivals are
  // rare, Fall arrivals heaviest), renormalized to keep the per-term average
  // at the configured rate.
  std::vector<int> arrivals(cfg.n_terms, 0);
  {
    const double base = cfg.new_student_rate * cfg.n_students;
    double wsum = 0.0;
    std::vector<double> w(cfg.n_terms, 0.0);
    for (int t = 1; t < cfg.n_terms; ++t) {
      switch (term_from_index(t).season) {
        case Season::Fall: w[t] = 1.6; break;
        case Season::Spring: w[t] = 1.0; break;
        case Season::Summer: w[t] = 0.1; break;
      }
      wsum += w[t];
    }
    int assigned = 0;
    for (int t = 1; t < cfg.n_terms; ++t) {
      const double share = wsum > 0.0 ? w[t] * (cfg.n_terms - 1) / wsum : 0.0;
      arrivals[t] = static_cast<int>(std::lround(base * share));
      assigned += arrivals[t];
    }
    arrivals[0] = cfg.n_students - assigned;
    if (arrivals[0] < 1) throw std::invalid_argument("synth config: new_student_rate leaves no initial cohort");
  }

  std::vector<Student> students(cfg.n_students);
  {
    int next = 0;
    for (int t = 0; t < cfg.n_terms; ++t) {
      for (int a = 0; a < arrivals[t] && next < cfg.n_students; ++a, ++next) {
        auto& s = students[next];
        s.id = tagged("s", next, 4);
        s.arrival = t;
        s.transfer = rng.uniform() < cfg.transfer_fraction;
        s.hsgpa = std::min(4.0, std::max(0.0, rng.normal(s.transfer ? 3.1 : 3.0, 0.4)));
        s.bias = rng.normal(0.0, cfg.bias_std_student) + cfg.content_strength * content_step(s.hsgpa);
        s.factors.resize(k);
        for (double& f : s.factors) f = rng.normal(0.0, factor_std);
        const double zh = (s.hsgpa - 3.0) / 0.4;
        s.sat = std::min(1600.0, std::max(400.0, std::round(850.0 + 200.0 * (0.5 * zh + 0.87 * rng.normal()))));
        s.age = 18.0 + std::floor(std::abs(rng.normal(0.0, 3.0))) + (s.transfer ? 4.0 : 0.0);
        s.major = tagged("MAJ", static_cast<int>(rng.index(n_majors)), 2);
        s.race = tagged("R", static_cast<int>(rng.index(n_races)), 1);
        s.sex = rng.uniform() < 0.04 ? "U" : (rng.uniform() < 0.5 ? "F" : "M");
        s.zip = tagged("Z", static_cast<int>(rng.index(n_zips)), 2);
        s.hs = tagged("H", static_cast<int>(rng.index(n_hs)), 2);
        s.institution = tagged("U", static_cast<int>(rng.index(n_institutions)), 2);
      }
    }
  }

  SynthResult result;
  auto& records = result.transcript.records;
  for (int f = 0; f < cfg.n_noise_features; ++f) {
    result.transcript.extra_feature_names.push_back(tagged("noise", f, 2));
  }

  auto pick_courses = [&](Student& s, int term, int count) {
    std::vector<int> candidates;
    double total_w = 0.0;
    for (int j = 0; j < cfg.n_courses; ++j) {
      if (courses[j].debut <= term &&
          std::find(s.taken.begin(), s.taken.end(), j) == s.taken.end()) {
        candidates.push_back(j);
        total_w += courses[j].popularity;
      }
    }
    // popularity-weighted sampling without replacement
    std::vector<int> chosen;
    for (int c = 0; c < count && !candidates.empty(); ++c) {
      double r = rng.uniform() * total_w;
      std::size_t at = 0;
      for (; at + 1 < candidates.size(); ++at) {
        r -= courses[candidates[at]].popularity;
        if (r <= 0.0) break;
      }
      chosen.push_back(candidates[at]);
      total_w -= courses[candidates[at]].popularity;
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return chosen;
  };

  auto emit = [&](const Student& s, int course_idx, int term, bool credit_block) {
    const Course& c = courses[course_idx];
    TranscriptRecord r;
    r.sid = s.id;
    r.cid = c.id;
    r.term = term_from_index(term);
    r.major = s.major;
    r.race = s.race;
    r.sex = s.sex;
    r.age = s.age;
    r.zip = s.zip;
    r.sat = s.sat;
    r.hs = s.hs;
    r.hsgpa = s.hsgpa;
    r.cohort = term_from_index(s.arrival);
    r.transfer = s.transfer;
    r.cdisc = c.cdisc;
    r.chrs = c.chrs;
    r.clevel = c.clevel;

    double g;
    if (credit_block) {
      // mapped transfer credits: no course/instructor/interaction structure,
      // upward shift, damped noise, and only passing grades transfer
      r.institution_id = s.institution;
      g = cfg.grade_mean + cfg.transfer_shift + s.bias +
          rng.normal(0.0, cfg.noise_std * cfg.transfer_noise_scale);
      g = std::max(1.0, g);
    } else {
      const Instructor& in = instructors[c.instructors[(term + course_idx) % c.instructors.size()]];
      r.iid = in.id;
      r.iclass = in.iclass;
      r.irank = in.irank;
      r.itenure = in.itenure;
      g = cfg.grade_mean + s.bias + c.bias + in.bias + dot(s.factors, c.factors) +
          rng.normal(0.0, cfg.noise_std);
    }
    r.grade = snap_to_grade_grid(g);

    for (int f = 0; f < cfg.n_noise_features; ++f) {
      r.extra.push_back(tagged("z", static_cast<int>(rng.index(8)), 1));
    }
    records.push_back(std::move(r));
  };

  for (int t = 0; t < cfg.n_terms; ++t) {
    const bool summer = term_from_index(t).season == Season::Summer;
    for (auto& s : students) {
      if (s.arrival > t) continue;
      const bool arriving = s.arrival == t;
      if (arriving && s.transfer && t > 0) {
        // transfer students bring their mapped credit block on arrival
        const int block = 8 + static_cast<int>(rng.index(5));
        for (int j : pick_courses(s, t, block)) {
          emit(s, j, t, true);
          s.taken.push_back(j);
        }
        continue;
      }
      double participation = summer ? 0.12 : 0.93;
      if (arriving) participation = 1.0;
      if (rng.uniform() >= participation) continue;
      const int count = summer ? 1 + static_cast<int>(rng.index(2))
                               : 4 + static_cast<int>(rng.index(4));
      for (int j : pick_courses(s, t, count)) {
        emit(s, j, t, false);
        s.taken.push_back(j);
      }
    }
  }

  auto& truth = result.truth;
  truth.mu = cfg.grade_mean;
  for (const auto& s : students) {
    truth.student_bias[s.id] = s.bias;
    truth.student_factors[s.id] = s.factors;
  }
  for (const auto& c : courses) {
    truth.course_bias[c.id] = c.bias;
    truth.course_factors[c.id] = c.factors;
  }
  for (const auto& in : instructors) truth.instructor_bias[in.id] = in.bias;
  truth.noise_feature_names = result.transcript.extra_feature_names;
  return result;
}

namespace {

json config_to_json_obj(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"n_students", c.n_students},
              {"n_courses", c.n_courses},
              {"n_instructors", c.n_instructors},
              {"n_terms", c.n_terms},
              {"latent_rank", c.latent_rank},
              {"grade_mean", c.grade_mean},
              {"bias_std_student", c.bias_std_student},
              {"bias_std_course", c.bias_std_course},
              {"bias_std_instructor", c.bias_std_instructor},
              {"interaction_std", c.interaction_std},
              {"noise_std", c.noise_std},
              {"transfer_fraction", c.transfer_fraction},
              {"new_student_rate", c.new_student_rate},
              {"n_noise_features", c.n_noise_features},
              {"content_strength", c.content_strength},
              {"transfer_shift", c.transfer_shift},
              {"transfer_noise_scale", c.transfer_noise_scale}};
}

}  // namespace

std::string synth_config_to_json(const SynthConfig& cfg) {
  return config_to_json_obj(cfg).dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SynthConfig c;
  auto load = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  load("seed", c.seed);
  load("n_students", c.n_students);
  load("n_courses", c.n_courses);
  load("n_instructors", c.n_instructors);
  load("n_terms", c.n_terms);
  load("latent_rank", c.latent_rank);
  load("grade_mean", c.grade_mean);
  load("bias_std_student", c.bias_std_student);
  load("bias_std_course", c.bias_std_course);
  load("bias_std_instructor", c.bias_std_instructor);
  load("interaction_std", c.interaction_std);
  load("noise_std", c.noise_std);
  load("transfer_fraction", c.transfer_fraction);
  load("new_student_rate", c.new_student_rate);
  load("n_noise_features", c.n_noise_features);
  load("content_strength", c.content_strength);
  load("transfer_shift", c.transfer_shift);
  load("transfer_noise_scale", c.transfer_noise_scale);
  return c;
}

void write_truth_json(const std::string& path, const SynthTruth& truth, const SynthConfig& cfg) {
  json j;
  j["mu"] = truth.mu;
  j["student_bias"] = truth.student_bias;
  j["course_bias"] = truth.course_bias;
  j["instructor_bias"] = truth.instructor_bias;
  j["student_factors"] = truth.student_factors;
  j["course_factors"] = truth.course_factors;
  j["noise_feature_names"] = truth.noise_feature_names;
  j["config"] = config_to_json_obj(cfg);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write truth file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace nextgrade
