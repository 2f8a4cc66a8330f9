#include "nextgrade/linear_sgd.hpp"

#include <cmath>
#include <stdexcept>

#include "nextgrade/rng.hpp"

namespace nextgrade {

LinearModel sgd_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                    std::size_t columns, const SgdConfig& cfg, std::uint64_t seed) {
  if (targets.empty()) throw std::invalid_argument("sgd_fit: empty training set");
  if (cfg.iterations < 1) throw std::invalid_argument("sgd_fit: iterations must be >= 1");
  if (dense_rows.size() != targets.size() * columns) {
    throw std::invalid_argument("sgd_fit: row/target shape mismatch");
  }

  LinearModel m;
  m.coef.assign(columns, 0.0);

  Rng rng(seed);
  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const double lr = cfg.learning_rate;
  const double shrink = cfg.learning_rate * cfg.l1;
  for (int epoch = 0; epoch < cfg.iterations; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const double* row = dense_rows.data() + idx * columns;
      double pred = m.intercept;
      for (std::size_t c = 0; c < columns; ++c) pred += m.coef[c] * row[c];
      const double err = targets[idx] - pred;
      if (!std::isfinite(err)) {
        throw std::runtime_error("sgd_fit: non-finite update at epoch " + std::to_string(epoch));
      }
      m.intercept += lr * err;
      for (std::size_t c = 0; c < columns; ++c) {
        if (row[c] == 0.0) continue;
        double w = m.coef[c] + lr * err * row[c];
        // soft threshold toward zero
        if (w > shrink) {
          w -= shrink;
        } else if (w < -shrink) {
          w += shrink;
        } else {
          w = 0.0;
        }
        m.coef[c] = w;
      }
    }
  }
  return m;
}

double linear_predict(const LinearModel& m, const double* row) {
  double pred = m.intercept;
  for (std::size_t c = 0; c < m.coef.size(); ++c) pred += m.coef[c] * row[c];
  return pred;
}

}  // namespace nextgrade
