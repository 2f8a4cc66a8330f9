#include "nextgrade/baselines.hpp"

#include <stdexcept>

#include "nextgrade/rng.hpp"

namespace nextgrade {

std::vector<double> ur_predict(std::size_t n_rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n_rows);
  for (double& v : out) v = rng.uniform(kGradeMin, kGradeMax);
  return out;
}

MeansModel means_fit(const std::vector<GradedDyad>& train) {
  if (train.empty()) throw std::invalid_argument("means_fit: empty training set");
  MeansModel m;
  std::unordered_map<std::string, std::pair<double, std::size_t>> s, c;
  double total = 0.0;
  for (const auto& d : train) {
    total += d.grade;
    auto& se = s[d.sid];
    se.first += d.grade;
    se.second += 1;
    auto& ce = c[d.cid];
    ce.first += d.grade;
    ce.second += 1;
  }
  m.global_mean = total / static_cast<double>(train.size());
  for (auto& [id, acc] : s) m.student_mean[id] = acc.first / static_cast<double>(acc.second);
  for (auto& [id, acc] : c) m.course_mean[id] = acc.first / static_cast<double>(acc.second);
  return m;
}

double gm_predict(const MeansModel& m) { return m.global_mean; }

double mom_predict(const MeansModel& m, const std::string& sid, const std::string& cid) {
  double sum = m.global_mean;
  int n = 1;
  if (auto it = m.student_mean.find(sid); it != m.student_mean.end()) {
    sum += it->second;
    ++n;
  }
  if (auto it = m.course_mean.find(cid); it != m.course_mean.end()) {
    sum += it->second;
    ++n;
  }
  return sum / n;
}

}  // namespace nextgrade
