#include "nextgrade/fm.hpp"

#include <cmath>
#include <stdexcept>

#include "nextgrade/rng.hpp"

namespace nextgrade {

namespace {

// Gamma(1,1) hyperpriors on the noise and group precisions; group means get a
// N(0, 1/lambda_g) prior (gamma0 = 1, mu0 = 0).
constexpr double kAlpha0 = 1.0, kBeta0 = 1.0;
constexpr double kAlphaLambda = 1.0, kBetaLambda = 1.0;
constexpr double kGamma0 = 1.0, kMu0 = 0.0;

struct Csc {
  std::vector<std::size_t> col_ptr;
  std::vector<int> row;
  std::vector<double> val;

  explicit Csc(const DesignMatrix& m) {
    col_ptr.assign(static_cast<std::size_t>(m.columns) + 1, 0);
    for (int c : m.col) ++col_ptr[static_cast<std::size_t>(c) + 1];
    for (std::size_t c = 0; c < static_cast<std::size_t>(m.columns); ++c) {
      col_ptr[c + 1] += col_ptr[c];
    }
    row.resize(m.col.size());
    val.resize(m.col.size());
    std::vector<std::size_t> at(col_ptr.begin(), col_ptr.end() - 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
        const std::size_t c = static_cast<std::size_t>(m.col[k]);
        row[at[c]] = static_cast<int>(i);
        val[at[c]] = m.val[k];
        ++at[c];
      }
    }
  }
};

struct GroupHyper {
  double mu = 0.0;
  double lambda = 1.0;
};

// lambda_g | rest ~ Gamma, mu_g | rest ~ Normal; standard conjugate updates
// over the group's members.
void sample_group(Rng& rng, GroupHyper& g, const double* theta, std::size_t m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += theta[i];
  double dev = kGamma0 * (g.mu - kMu0) * (g.mu - kMu0);
  for (std::size_t i = 0; i < m; ++i) dev += (theta[i] - g.mu) * (theta[i] - g.mu);
  g.lambda = rng.gamma(kAlphaLambda + 0.5 * (static_cast<double>(m) + 1.0),
                       kBetaLambda + 0.5 * dev);
  const double denom = static_cast<double>(m) + kGamma0;
  g.mu = rng.normal((sum + kGamma0 * kMu0) / denom, 1.0 / std::sqrt(denom * g.lambda));
}

// Prediction under the current draw, used for residual init and the per-draw
// test accumulators.
double draw_predict(double w0, const std::vector<double>& w, const std::vector<double>& v, int k,
                    const DesignMatrix& m, std::size_t i) {
  double pred = w0;
  for (std::size_t it = m.row_ptr[i]; it < m.row_ptr[i + 1]; ++it) {
    pred += w[m.col[it]] * m.val[it];
  }
  for (int f = 0; f < k; ++f) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t it = m.row_ptr[i]; it < m.row_ptr[i + 1]; ++it) {
      const double t = v[static_cast<std::size_t>(m.col[it]) * k + f] * m.val[it];
      s += t;
      s2 += t * t;
    }
    pred += 0.5 * (s * s - s2);
  }
  return pred;
}

}  // namespace

FmFit fm_fit(const DesignMatrix& train, const FmConfig& cfg, std::uint64_t seed,
             const DesignMatrix* test) {
  if (train.rows() == 0) throw std::invalid_argument("fm_fit: empty training matrix");
  if (cfg.rank < 1) throw std::invalid_argument("fm_fit: rank must be >= 1");
  if (cfg.iterations < 1) throw std::invalid_argument("fm_fit: iterations must be >= 1");
  for (double t : train.target) {
    if (!std::isfinite(t)) throw std::invalid_argument("fm_fit: training target missing");
  }

  const std::size_t n = train.rows();
  const int p = train.columns;
  const int k = cfg.rank;
  Rng rng(seed);

  std::vector<double> w(p, 0.0);
  std::vector<double> v(static_cast<std::size_t>(p) * k);
  for (double& x : v) x = rng.normal(0.0, cfg.init_std);
  double w0 = 0.0;

  const Csc csc(train);

  // e = prediction - target, maintained incrementally across updates
  std::vector<double> e(n);
  {
    std::vector<double> pred(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = draw_predict(w0, w, v, k, train, i);
    }
    for (std::size_t i = 0; i < n; ++i) e[i] = pred[i] - train.target[i];
  }

  double alpha = 1.0;
  GroupHyper hyper_w0, hyper_w;
  std::vector<GroupHyper> hyper_v(k);

  std::vector<double> q(n);  // per-factor caches, rebuilt each factor pass

  const int burn = static_cast<int>(cfg.iterations * cfg.burn_in_fraction);
  std::vector<double> mean_w(p, 0.0), mean_v(static_cast<std::size_t>(p) * k, 0.0);
  double mean_w0 = 0.0;
  std::vector<double> test_acc;
  if (test) test_acc.assign(test->rows(), 0.0);
  int draws = 0;

  for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
    // noise precision
    double sq = 0.0;
    for (double ei : e) sq += ei * ei;
    if (!std::isfinite(sq)) {
      throw std::runtime_error("fm_fit: non-finite residual at sweep " + std::to_string(sweep));
    }
    alpha = rng.gamma(kAlpha0 + 0.5 * static_cast<double>(n), kBeta0 + 0.5 * sq);

    // group hyperparameters
    sample_group(rng, hyper_w0, &w0, 1);
    sample_group(rng, hyper_w, w.data(), w.size());
    for (int f = 0; f < k; ++f) {
      // factor column f of V is strided; gather once
      std::vector<double> column(p);
      for (int l = 0; l < p; ++l) column[l] = v[static_cast<std::size_t>(l) * k + f];
      sample_group(rng, hyper_v[f], column.data(), column.size());
    }

    // intercept
    {
      double hr = 0.0;
      for (double ei : e) hr += w0 - ei;
      const double tau = alpha * static_cast<double>(n) + hyper_w0.lambda;
      const double mean = (alpha * hr + hyper_w0.lambda * hyper_w0.mu) / tau;
      const double neww0 = rng.normal(mean, 1.0 / std::sqrt(tau));
      const double delta = neww0 - w0;
      for (double& ei : e) ei += delta;
      w0 = neww0;
    }

    // linear weights
    for (int l = 0; l < p; ++l) {
      double h2 = 0.0, hr = 0.0;
      for (std::size_t it = csc.col_ptr[l]; it < csc.col_ptr[l + 1]; ++it) {
        const double x = csc.val[it];
        h2 += x * x;
        hr += x * (w[l] * x - e[csc.row[it]]);
      }
      const double tau = alpha * h2 + hyper_w.lambda;
      const double mean = (alpha * hr + hyper_w.lambda * hyper_w.mu) / tau;
      const double neww = rng.normal(mean, 1.0 / std::sqrt(tau));
      const double delta = neww - w[l];
      if (delta != 0.0) {
        for (std::size_t it = csc.col_ptr[l]; it < csc.col_ptr[l + 1]; ++it) {
          e[csc.row[it]] += delta * csc.val[it];
        }
      }
      w[l] = neww;
    }

    // factor columns
    for (int f = 0; f < k; ++f) {
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double qi = 0.0;
        for (std::size_t it = train.row_ptr[i]; it < train.row_ptr[i + 1]; ++it) {
          qi += v[static_cast<std::size_t>(train.col[it]) * k + f] * train.val[it];
        }
        q[i] = qi;
      }
      for (int l = 0; l < p; ++l) {
        double& vlf = v[static_cast<std::size_t>(l) * k + f];
        double h2 = 0.0, hr = 0.0;
        for (std::size_t it = csc.col_ptr[l]; it < csc.col_ptr[l + 1]; ++it) {
          const double x = csc.val[it];
          const double h = x * q[csc.row[it]] - x * x * vlf;
          h2 += h * h;
          hr += h * (vlf * h - e[csc.row[it]]);
        }
        const double tau = alpha * h2 + hyper_v[f].lambda;
        const double mean = (alpha * hr + hyper_v[f].lambda * hyper_v[f].mu) / tau;
        const double newv = rng.normal(mean, 1.0 / std::sqrt(tau));
        const double delta = newv - vlf;
        if (delta != 0.0) {
          for (std::size_t it = csc.col_ptr[l]; it < csc.col_ptr[l + 1]; ++it) {
            const double x = csc.val[it];
            const std::size_t r = static_cast<std::size_t>(csc.row[it]);
            const double h = x * q[r] - x * x * vlf;
            e[r] += delta * h;
            q[r] += delta * x;
          }
        }
        vlf = newv;
      }
    }

    if (sweep >= burn) {
      ++draws;
      mean_w0 += w0;
      for (int l = 0; l < p; ++l) mean_w[l] += w[l];
      for (std::size_t i = 0; i < v.size(); ++i) mean_v[i] += v[i];
      if (test) {
        for (std::size_t i = 0; i < test->rows(); ++i) {
          test_acc[i] += draw_predict(w0, w, v, k, *test, i);
        }
      }
    }
  }

  FmFit fit;
  fit.model.columns = p;
  fit.model.rank = k;
  fit.model.w0 = mean_w0 / draws;
  fit.model.w = std::move(mean_w);
  for (double& x : fit.model.w) x /= draws;
  fit.model.v = std::move(mean_v);
  for (double& x : fit.model.v) x /= draws;
  if (test) {
    fit.test_predictions = std::move(test_acc);
    for (double& x : fit.test_predictions) x /= draws;
  }
  return fit;
}

double fm_predict(const FmModel& m, const int* cols, const double* vals, std::size_t nnz) {
  double pred = m.w0;
  for (std::size_t i = 0; i < nnz; ++i) pred += m.w[cols[i]] * vals[i];
  for (int f = 0; f < m.rank; ++f) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < nnz; ++i) {
      const double t = m.v[static_cast<std::size_t>(cols[i]) * m.rank + f] * vals[i];
      s += t;
      s2 += t * t;
    }
    pred += 0.5 * (s * s - s2);
  }
  return pred;
}

double fm_predict(const FmModel& m, const std::vector<std::pair<int, double>>& row) {
  std::vector<int> cols(row.size());
  std::vector<double> vals(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    cols[i] = row[i].first;
    vals[i] = row[i].second;
  }
  return fm_predict(m, cols.data(), vals.data(), row.size());
}

std::vector<double> fm_predict_all(const FmModel& m, const DesignMatrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    out[i] = fm_predict(m, rows.col.data() + rows.row_ptr[i], rows.val.data() + rows.row_ptr[i],
                        rows.row_nnz(i));
  }
  return out;
}

}  // namespace nextgrade
