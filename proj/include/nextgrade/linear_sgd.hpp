#pragma once

#include <cstdint>
#include <vector>

namespace nextgrade {

struct SgdConfig {
  double learning_rate = 0.001;
  double l1 = 0.001;
  int iterations = 15;
};

struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coef;
};

// Least-squares linear fit by per-sample gradient steps with soft L1
// shrinkage on every touched coefficient; the intercept is unpenalized.
// Deterministic under a fixed seed (per-epoch shuffles).
LinearModel sgd_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                    std::size_t columns, const SgdConfig& cfg, std::uint64_t seed);

double linear_predict(const LinearModel& m, const double* row);

}  // namespace nextgrade
