#include "nextgrade/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "nextgrade/types.hpp"

namespace nextgrade {

Metrics compute_metrics(const std::vector<PredictionPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("compute_metrics: no prediction pairs");
  double sq = 0.0;
  double abs_sum = 0.0;
  for (const auto& p : pairs) {
    const double e = p.predicted - p.truth;
    sq += e * e;
    abs_sum += std::abs(e);
  }
  Metrics m;
  m.count = pairs.size();
  const double n = static_cast<double>(pairs.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = abs_sum / n;
  // Var(|e|) = E[e^2] - E[|e|]^2
  const double var = sq / n - m.mae * m.mae;
  m.mae_std = std::sqrt(var > 0.0 ? var : 0.0);
  return m;
}

double clip_prediction(double raw) {
  if (!std::isfinite(raw)) throw std::invalid_argument("clip_prediction: non-finite prediction");
  return std::min(kGradeMax, std::max(kGradeMin, raw));
}

}  // namespace nextgrade
