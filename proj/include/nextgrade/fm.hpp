#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nextgrade/encoder.hpp"

namespace nextgrade {

struct FmConfig {
  int rank = 8;
  int iterations = 200;
  double init_std = 0.2;
  double burn_in_fraction = 0.5;  // first fraction of sweeps discarded
};

// Second-order factorization machine: global intercept, per-column linear
// weights, and rank-k factor rows whose dot products give the pairwise
// interaction weights. Parameters are posterior means over the retained
// Gibbs draws.
struct FmModel {
  int columns = 0;
  int rank = 0;
  double w0 = 0.0;
  std::vector<double> w;  // length columns
  std::vector<double> v;  // row-major [columns x rank]

  double pair_weight(int a, int b) const {  // Z_{a,b} = v_a . v_b
    const double* va = v.data() + static_cast<std::size_t>(a) * rank;
    const double* vb = v.data() + static_cast<std::size_t>(b) * rank;
    double s = 0.0;
    for (int f = 0; f < rank; ++f) s += va[f] * vb[f];
    return s;
  }
};

struct FmFit {
  FmModel model;
  // Per-draw test predictions averaged over the post-burn-in sweeps; empty
  // when no test matrix was supplied.
  std::vector<double> test_predictions;
};

// Gibbs sampler with Gaussian likelihood and per-group Gaussian priors whose
// mean/precision hyperparameters are themselves resampled every sweep;
// groups are {intercept}, {all w}, {each factor column of V}. Deterministic
// under a fixed seed. Throws std::runtime_error naming the sweep if the
// sampler leaves the finite range.
FmFit fm_fit(const DesignMatrix& train, const FmConfig& cfg, std::uint64_t seed,
             const DesignMatrix* test = nullptr);

// w0 + sum_l w_l x_l + sum_{l<l'} x_l x_l' (v_l . v_l'), computed in
// O(rank * nnz) via the sum-of-squares rearrangement.
double fm_predict(const FmModel& m, const std::vector<std::pair<int, double>>& row);
double fm_predict(const FmModel& m, const int* cols, const double* vals, std::size_t nnz);

std::vector<double> fm_predict_all(const FmModel& m, const DesignMatrix& rows);

}  // namespace nextgrade
