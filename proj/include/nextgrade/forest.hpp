#pragma once

#include <cstdint>
#include <vector>

namespace nextgrade {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 10;
  int mtry = 0;  // features considered per split; 0 = ceil(columns / 3)
  int threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean
};

struct SplitGain {
  int feature = 0;
  double gain = 0.0;  // squared-error reduction at the split
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<SplitGain> gains;
};

// Bagged regression trees: each tree is fit on a bootstrap resample (kept as
// per-row weights) and greedily splits on the (feature, threshold) pair that
// minimizes the children's summed squared error among a per-node random
// feature subset. Ties break to the lowest feature index, then the lowest
// threshold. A max_depth of 0 degenerates to the training-mean predictor
// (bootstrapping is skipped so the mean is exact).
struct ForestModel {
  std::size_t columns = 0;
  std::vector<Tree> trees;
  double tree_weight() const { return 1.0 / static_cast<double>(trees.size()); }
};

ForestModel rf_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                   std::size_t columns, const ForestConfig& cfg, std::uint64_t seed);

double rf_predict(const ForestModel& m, const double* row);

std::vector<double> rf_predict_all(const ForestModel& m, const std::vector<double>& queries,
                                   std::size_t n_queries);

}  // namespace nextgrade
