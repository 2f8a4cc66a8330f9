#include "nextgrade/pmlr.hpp"

#include <cmath>
#include <stdexcept>

#include "nextgrade/rng.hpp"

namespace nextgrade {

namespace {

double project(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

PmlrModel pmlr_fit(const std::vector<double>& dense_rows, const std::vector<double>& targets,
                   std::size_t columns, const std::vector<PmlrSample>& dyads,
                   const PmlrConfig& cfg, std::uint64_t seed) {
  if (cfg.k < 1) throw std::invalid_argument("pmlr_fit: k must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("pmlr_fit: epochs must be >= 1");
  if (targets.empty()) throw std::invalid_argument("pmlr_fit: empty training set");
  if (dyads.size() != targets.size() || dense_rows.size() != targets.size() * columns) {
    throw std::invalid_argument("pmlr_fit: shape mismatch");
  }

  PmlrModel m;
  m.k = cfg.k;
  m.columns = columns;

  std::vector<std::pair<int, int>> idx(targets.size());
  for (std::size_t i = 0; i < dyads.size(); ++i) {
    const auto si = m.student_index.try_emplace(dyads[i].sid, static_cast<int>(m.student_index.size())).first;
    const auto ci = m.course_index.try_emplace(dyads[i].cid, static_cast<int>(m.course_index.size())).first;
    idx[i] = {si->second, ci->second};
  }

  Rng rng(seed);
  const int k = cfg.k;
  m.student_bias.resize(m.student_index.size());
  m.course_bias.resize(m.course_index.size());
  for (double& x : m.student_bias) x = rng.uniform(0.0, 0.01);
  for (double& x : m.course_bias) x = rng.uniform(0.0, 0.01);
  m.membership.assign(m.student_index.size() * static_cast<std::size_t>(k), 1.0 / k);
  m.coef.resize(static_cast<std::size_t>(k) * columns);
  for (double& x : m.coef) x = rng.uniform(0.0, 0.01);
  m.w0 = 0.0;

  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> responses(k);
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at : order) {
      const double* x = dense_rows.data() + at * columns;
      const auto [si, ci] = idx[at];
      double* P = m.membership.data() + static_cast<std::size_t>(si) * k;

      double mix = 0.0;
      for (int l = 0; l < k; ++l) {
        double r = 0.0;
        const double* W = m.coef.data() + static_cast<std::size_t>(l) * columns;
        for (std::size_t c = 0; c < columns; ++c) r += W[c] * x[c];
        responses[l] = r;
        mix += P[l] * r;
      }
      const double pred = m.w0 + m.student_bias[si] + m.course_bias[ci] + mix;
      const double err = pred - targets[at];
      if (!std::isfinite(err)) {
        throw std::runtime_error("pmlr_fit: non-finite update at epoch " + std::to_string(epoch));
      }

      m.w0 = project(m.w0 - lr * err);
      m.student_bias[si] = project(m.student_bias[si] - lr * (err + cfg.lambda_b * m.student_bias[si]));
      m.course_bias[ci] = project(m.course_bias[ci] - lr * (err + cfg.lambda_b * m.course_bias[ci]));
      for (int l = 0; l < k; ++l) {
        const double pl = P[l];
        P[l] = project(pl - lr * (err * responses[l] + cfg.lambda_w * pl));
        double* W = m.coef.data() + static_cast<std::size_t>(l) * columns;
        for (std::size_t c = 0; c < columns; ++c) {
          if (x[c] == 0.0) continue;
          W[c] = project(W[c] - lr * (err * pl * x[c] + cfg.lambda_w * W[c]));
        }
      }
    }
    lr *= cfg.lr_decay;
  }
  return m;
}

std::vector<double> pmlr_component_responses(const PmlrModel& m, const double* row) {
  std::vector<double> responses(m.k);
  for (int l = 0; l < m.k; ++l) {
    const double* W = m.coef.data() + static_cast<std::size_t>(l) * m.columns;
    double r = 0.0;
    for (std::size_t c = 0; c < m.columns; ++c) r += W[c] * row[c];
    responses[l] = r;
  }
  return responses;
}

double pmlr_predict(const PmlrModel& m, const std::string& sid, const std::string& cid,
                    const double* row) {
  double pred = m.w0;
  const auto si = m.student_index.find(sid);
  const auto ci = m.course_index.find(cid);
  if (si != m.student_index.end()) pred += m.student_bias[si->second];
  if (ci != m.course_index.end()) pred += m.course_bias[ci->second];

  const std::vector<double> responses = pmlr_component_responses(m, row);
  if (si != m.student_index.end()) {
    const double* P = m.membership.data() + static_cast<std::size_t>(si->second) * m.k;
    for (int l = 0; l < m.k; ++l) pred += P[l] * responses[l];
  } else {
    // unseen student: uniform membership over the shared models
    const double u = 1.0 / m.k;
    for (int l = 0; l < m.k; ++l) pred += u * responses[l];
  }
  return pred;
}

}  // namespace nextgrade
