#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nextgrade/baselines.hpp"

namespace nextgrade {

struct SvdConfig {
  int rank = 8;
  int epochs = 50;
  double learning_rate = 0.005;
  double l2 = 0.02;
};

// Latent-factor model over observed (student, course, grade) entries; grade
// is predicted as the dot product of the two factor vectors. Factors exist
// only for training-seen identifiers.
struct SvdModel {
  int rank = 0;
  std::unordered_map<std::string, int> student_index;
  std::unordered_map<std::string, int> course_index;
  std::vector<double> student_factors;  // row-major [n_students x rank]
  std::vector<double> course_factors;   // row-major [n_courses x rank]
  // training-history course lists per student, for the kNN post-processing
  std::vector<std::vector<int>> student_courses;
};

SvdModel svd_fit(const std::vector<GradedDyad>& train, const SvdConfig& cfg, std::uint64_t seed);

// Dot product when both ids were seen in training; absent otherwise.
std::optional<double> svd_predict(const SvdModel& m, const std::string& sid,
                                  const std::string& cid);

// Paterek-style post-processing: among the student's training courses, find
// the one most cosine-similar to the target in latent space and return the
// SVD prediction for it. Falls back to svd_predict when the student has no
// history or the target course is unseen.
std::optional<double> svdknn_predict(const SvdModel& m, const std::string& sid,
                                     const std::string& cid);

}  // namespace nextgrade
