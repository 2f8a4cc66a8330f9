#pragma once

#include <cstddef>
#include <vector>

namespace nextgrade {

struct Metrics {
  std::size_t count = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double mae_std = 0.0;  // population std of the absolute errors
};

struct PredictionPair {
  double truth = 0.0;
  double predicted = 0.0;
};

// RMSE = sqrt(mean squared error), MAE = mean absolute error, plus the
// population std of |error|. Rejects empty input.
Metrics compute_metrics(const std::vector<PredictionPair>& pairs);

// min(4, max(0, raw)); rejects non-finite input.
double clip_prediction(double raw);

}  // namespace nextgrade
