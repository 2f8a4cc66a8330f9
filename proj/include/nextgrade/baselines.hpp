#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nextgrade/types.hpp"

namespace nextgrade {

// Uniform-random predictions on [0, 4]; i.i.d. per row, deterministic per seed.
std::vector<double> ur_predict(std::size_t n_rows, std::uint64_t seed);

// Global-mean and mean-of-means baselines share the fitted state: the global
// training mean plus per-student and per-course means.
struct MeansModel {
  double global_mean = 0.0;
  std::unordered_map<std::string, double> student_mean;
  std::unordered_map<std::string, double> course_mean;
};

struct GradedDyad {
  std::string sid;
  std::string cid;
  double grade = 0.0;
};

MeansModel means_fit(const std::vector<GradedDyad>& train);

double gm_predict(const MeansModel& m);

// Equal-weight mean of whichever of {global, student, course} means exist for
// the dyad; reduces to the global mean when both entities are unseen.
double mom_predict(const MeansModel& m, const std::string& sid, const std::string& cid);

}  // namespace nextgrade
