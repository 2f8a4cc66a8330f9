#pragma once

#include <cstddef>
#include <vector>

namespace nextgrade {

// Exact k-nearest-neighbor regressor over dense feature rows: uniformly
// weighted mean of the k training targets closest in Euclidean distance.
// Ties on distance resolve to the lower training row index.
struct NeighborModel {
  std::size_t columns = 0;
  int k = 20;
  std::vector<double> rows;     // row-major [n x columns]
  std::vector<double> targets;  // length n

  std::size_t size() const { return targets.size(); }
};

NeighborModel knn_fit(std::vector<double> dense_rows, std::vector<double> targets,
                      std::size_t columns, int k);

double knn_predict(const NeighborModel& m, const double* query);

std::vector<double> knn_predict_all(const NeighborModel& m, const std::vector<double>& queries,
                                    std::size_t n_queries);

}  // namespace nextgrade
