#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace nextgrade {

struct PmlrConfig {
  int k = 4;  // number of shared regression models
  double lambda_w = 0.01;
  double lambda_b = 0.5;
  double learning_rate = 0.001;
  double lr_decay = 0.95;  // per-epoch multiplicative decay
  int epochs = 50;
};

// Personalized multi-linear regression: prediction = w0 + s_i + c_j +
// P_i . (W x) with a per-student mixture row P_i over k shared coefficient
// rows W. Every parameter is constrained non-negative (projection after each
// stochastic step). Unseen students/courses contribute zero bias and a
// uniform membership row.
struct PmlrModel {
  int k = 0;
  std::size_t columns = 0;
  double w0 = 0.0;
  std::unordered_map<std::string, int> student_index;
  std::unordered_map<std::string, int> course_index;
  std::vector<double> student_bias;  // s, length n_students
  std::vector<double> course_bias;   // c, length n_courses
  std::vector<double> membership;    // P, row-major [n_students x k]
  std::vector<double> coef;          // W, row-major [k x columns]
};

struct PmlrSample {
  std::string sid;
  std::string cid;
};

PmlrModel pmlr_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                   std::size_t columns, const std::vector<PmlrSample>& dyads,
                   const PmlrConfig& cfg, std::uint64_t seed);

double pmlr_predict(const PmlrModel& m, const std::string& sid, const std::string& cid,
                    const double* row);

// Per-model linear responses W x for one row (one value per mixture
// component); exposed for the importance decomposition.
std::vector<double> pmlr_component_responses(const PmlrModel& m, const double* row);

}  // namespace nextgrade
