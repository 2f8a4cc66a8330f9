#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nextgrade/types.hpp"

namespace nextgrade {

// Synthetic transcript generator with planted structure: per-entity additive
// biases, a low-rank student x course interaction, Gaussian noise, optional
// hsgpa-driven content effect, transfer arrivals with an upward-shifted and
// lower-variance credit block, and optional pure-noise categorical columns.
struct SynthConfig {
  std::uint64_t seed = 7;
  int n_students = 1800;
  int n_courses = 120;
  int n_instructors = 60;
  int n_terms = 10;
  int latent_rank = 4;
  double grade_mean = 3.0;
  double bias_std_student = 0.4;
  double bias_std_course = 0.35;
  double bias_std_instructor = 0.2;
  double interaction_std = 0.25;
  double noise_std = 0.35;
  double transfer_fraction = 0.3;
  double new_student_rate = 0.05;  // per-term arrivals as a fraction of n_students
  int n_noise_features = 0;

  // planted content signal: step(hsgpa) scaled into the student bias
  double content_strength = 0.3;
  // transfer-credit grade distribution: mean shift and noise damping
  double transfer_shift = 0.4;
  double transfer_noise_scale = 0.6;

  void validate() const;  // throws std::invalid_argument on degenerate configs
};

// Planted ground truth retained alongside the dataset so recovery tests can
// compare estimates against it.
struct SynthTruth {
  double mu = 0.0;
  std::map<std::string, double> student_bias;  // content effect included
  std::map<std::string, double> course_bias;
  std::map<std::string, double> instructor_bias;
  std::map<std::string, std::vector<double>> student_factors;
  std::map<std::string, std::vector<double>> course_factors;
  std::vector<std::string> noise_feature_names;
};

struct SynthResult {
  Transcript transcript;
  SynthTruth truth;
};

SynthResult generate_synthetic(const SynthConfig& cfg);

// Default dataset used by the evaluation pipeline and the acceptance suite:
// ~50k dyads over 10 terms.
SynthConfig default_synth_config();

std::string synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const std::string& text);

void write_truth_json(const std::string& path, const SynthTruth& truth, const SynthConfig& cfg);

}  // namespace nextgrade
