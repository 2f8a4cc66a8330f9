#include "nextgrade/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "nextgrade/rng.hpp"

namespace nextgrade {

namespace {

constexpr double kMinGain = 1e-12;

struct Sample {
  int row = 0;
  double weight = 0.0;
  double wy = 0.0;  // weight * target
};

struct NodeStats {
  double n = 0.0;    // total weight
  double sum = 0.0;  // weighted target sum
};

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<double>& colmajor, const std::vector<double>& targets,
              std::size_t n_rows, std::size_t columns, const std::vector<bool>& is_binary,
              int max_depth, int mtry, Rng& rng)
      : colmajor_(colmajor),
        targets_(targets),
        n_rows_(n_rows),
        columns_(columns),
        is_binary_(is_binary),
        max_depth_(max_depth),
        mtry_(mtry),
        rng_(rng),
        feature_pool_(columns) {
    for (std::size_t c = 0; c < columns; ++c) feature_pool_[c] = static_cast<int>(c);
  }

  Tree build(bool bootstrap) {
    samples_.clear();
    if (bootstrap) {
      std::vector<int> counts(n_rows_, 0);
      for (std::size_t i = 0; i < n_rows_; ++i) ++counts[rng_.index(n_rows_)];
      for (std::size_t i = 0; i < n_rows_; ++i) {
        if (counts[i] > 0) {
          samples_.push_back({static_cast<int>(i), static_cast<double>(counts[i]),
                              counts[i] * targets_[i]});
        }
      }
    } else {
      for (std::size_t i = 0; i < n_rows_; ++i) {
        samples_.push_back({static_cast<int>(i), 1.0, targets_[i]});
      }
    }
    tree_ = Tree{};
    grow(0, samples_.size(), 0);
    return std::move(tree_);
  }

 private:
  double value_at(int row, int feature) const {
    return colmajor_[static_cast<std::size_t>(feature) * n_rows_ + row];
  }

  NodeStats stats(std::size_t lo, std::size_t hi) const {
    NodeStats st;
    for (std::size_t i = lo; i < hi; ++i) {
      st.n += samples_[i].weight;
      st.sum += samples_[i].wy;
    }
    return st;
  }

  // score = sum_L^2/n_L + sum_R^2/n_R; maximizing it minimizes child SSE
  BestSplit find_split(std::size_t lo, std::size_t hi, const NodeStats& total) {
    const double base = total.sum * total.sum / total.n;
    BestSplit best;

    // deterministic draw of mtry distinct features, evaluated in ascending
    // column order so gain ties resolve to the lowest feature index
    const int m = std::min<int>(mtry_, static_cast<int>(columns_));
    for (int i = 0; i < m; ++i) {
      const std::size_t j = i + rng_.index(columns_ - i);
      std::swap(feature_pool_[i], feature_pool_[j]);
    }
    std::sort(feature_pool_.begin(), feature_pool_.begin() + m);

    for (int ci = 0; ci < m; ++ci) {
      const int feature = feature_pool_[ci];
      if (is_binary_[feature]) {
        NodeStats one;
        for (std::size_t i = lo; i < hi; ++i) {
          if (value_at(samples_[i].row, feature) > 0.5) {
            one.n += samples_[i].weight;
            one.sum += samples_[i].wy;
          }
        }
        const double n0 = total.n - one.n;
        if (one.n <= 0.0 || n0 <= 0.0) continue;
        const double s0 = total.sum - one.sum;
        const double gain = s0 * s0 / n0 + one.sum * one.sum / one.n - base;
        if (gain > best.gain + kMinGain) {
          best = {feature, 0.5, gain};
        }
        continue;
      }

      scratch_.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        scratch_.push_back({value_at(samples_[i].row, feature), samples_[i].wy, samples_[i].weight});
      }
      std::sort(scratch_.begin(), scratch_.end(),
                [](const Entry& a, const Entry& b) { return a.x < b.x; });
      double nl = 0.0, sl = 0.0;
      for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
        nl += scratch_[i].w;
        sl += scratch_[i].wy;
        if (scratch_[i].x >= scratch_[i + 1].x) continue;  // boundary between distinct values only
        const double nr = total.n - nl;
        const double sr = total.sum - sl;
        const double gain = sl * sl / nl + sr * sr / nr - base;
        if (gain > best.gain + kMinGain) {
          best = {feature, 0.5 * (scratch_[i].x + scratch_[i + 1].x), gain};
        }
      }
    }
    return best;
  }

  int grow(std::size_t lo, std::size_t hi, int depth) {
    const NodeStats total = stats(lo, hi);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{});
    tree_.nodes[id].value = total.sum / total.n;
    if (depth >= max_depth_ || hi - lo < 2) return id;

    const BestSplit split = find_split(lo, hi, total);
    if (split.feature < 0 || split.gain <= kMinGain) return id;

    const auto mid = std::partition(samples_.begin() + lo, samples_.begin() + hi,
                                    [&](const Sample& s) {
                                      return value_at(s.row, split.feature) <= split.threshold;
                                    });
    const std::size_t m = static_cast<std::size_t>(mid - samples_.begin());
    tree_.gains.push_back({split.feature, split.gain});
    const int left = grow(lo, m, depth + 1);
    const int right = grow(m, hi, depth + 1);
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  struct Entry {
    double x, wy, w;
  };

  const std::vector<double>& colmajor_;
  const std::vector<double>& targets_;
  std::size_t n_rows_;
  std::size_t columns_;
  const std::vector<bool>& is_binary_;
  int max_depth_;
  int mtry_;
  Rng& rng_;
  std::vector<int> feature_pool_;
  std::vector<Sample> samples_;
  std::vector<Entry> scratch_;
  Tree tree_;
};

}  // namespace

ForestModel rf_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                   std::size_t columns, const ForestConfig& cfg, std::uint64_t seed) {
  if (targets.empty()) throw std::invalid_argument("rf_fit: empty training set");
  if (cfg.n_trees < 1) throw std::invalid_argument("rf_fit: n_trees must be >= 1");
  if (cfg.max_depth < 0) throw std::invalid_argument("rf_fit: max_depth must be >= 0");
  if (columns == 0) throw std::invalid_argument("rf_fit: no feature columns");
  const std::size_t n = targets.size();
  if (dense_rows.size() != n * columns) throw std::invalid_argument("rf_fit: shape mismatch");

  ForestModel model;
  model.columns = columns;
  model.trees.resize(cfg.n_trees);

  // column-major copy for cache-friendly per-feature gathers
  std::vector<double> colmajor(dense_rows.size());
  std::vector<bool> is_binary(columns, true);
  for (std::size_t c = 0; c < columns; ++c) {
    bool binary = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = dense_rows[i * columns + c];
      colmajor[c * n + i] = v;
      binary = binary && (v == 0.0 || v == 1.0);
    }
    is_binary[c] = binary;
  }

  const int mtry = cfg.mtry > 0 ? cfg.mtry
                                : static_cast<int>((columns + 2) / 3);
  const bool bootstrap = cfg.max_depth > 0;

  auto fit_range = [&](int from, int to) {
    for (int t = from; t < to; ++t) {
      Rng rng(seed_for(seed, "rf-tree", static_cast<std::uint64_t>(t)));
      TreeBuilder builder(colmajor, targets, n, columns, is_binary, cfg.max_depth, mtry, rng);
      model.trees[t] = builder.build(bootstrap);
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || cfg.n_trees == 1) {
    fit_range(0, cfg.n_trees);
  } else {
    std::vector<std::thread> pool;
    const int per = (cfg.n_trees + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int from = w * per;
      const int to = std::min(cfg.n_trees, from + per);
      if (from < to) pool.emplace_back(fit_range, from, to);
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

double rf_predict(const ForestModel& m, const double* row) {
  double sum = 0.0;
  for (const Tree& tree : m.trees) {
    int at = 0;
    while (tree.nodes[at].feature >= 0) {
      const TreeNode& node = tree.nodes[at];
      at = row[node.feature] <= node.threshold ? node.left : node.right;
    }
    sum += tree.nodes[at].value;
  }
  return sum * m.tree_weight();
}

std::vector<double> rf_predict_all(const ForestModel& m, const std::vector<double>& queries,
                                   std::size_t n_queries) {
  std::vector<double> out(n_queries);
  for (std::size_t i = 0; i < n_queries; ++i) {
    out[i] = rf_predict(m, queries.data() + i * m.columns);
  }
  return out;
}

}  // namespace nextgrade
