#include "nextgrade/knn.hpp"

#include <algorithm>
#include <stdexcept>

namespace nextgrade {

NeighborModel knn_fit(std::vector<double> dense_rows, std::vector<double> targets,
                      std::size_t columns, int k) {
  if (targets.empty()) throw std::invalid_argument("knn_fit: empty training set");
  if (k < 1 || static_cast<std::size_t>(k) > targets.size()) {
    throw std::invalid_argument("knn_fit: k must lie in [1, training size]");
  }
  if (dense_rows.size() != targets.size() * columns) {
    throw std::invalid_argument("knn_fit: row/target shape mismatch");
  }
  NeighborModel m;
  m.columns = columns;
  m.k = k;
  m.rows = std::move(dense_rows);
  m.targets = std::move(targets);
  return m;
}

double knn_predict(const NeighborModel& m, const double* query) {
  const std::size_t n = m.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = m.rows.data() + i * m.columns;
    double d = 0.0;
    for (std::size_t c = 0; c < m.columns; ++c) {
      const double diff = row[c] - query[c];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  const std::size_t k = static_cast<std::size_t>(m.k);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += m.targets[dist[i].second];
  return sum / static_cast<double>(k);
}

std::vector<double> knn_predict_all(const NeighborModel& m, const std::vector<double>& queries,
                                    std::size_t n_queries) {
  std::vector<double> out(n_queries);
  for (std::size_t i = 0; i < n_queries; ++i) {
    out[i] = knn_predict(m, queries.data() + i * m.columns);
  }
  return out;
}

}  // namespace nextgrade
