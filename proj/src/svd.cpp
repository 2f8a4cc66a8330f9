#include "nextgrade/svd.hpp"

#include <cmath>
#include <stdexcept>

#include "nextgrade/rng.hpp"

namespace nextgrade {

SvdModel svd_fit(const std::vector<GradedDyad>& train, const SvdConfig& cfg, std::uint64_t seed) {
  if (cfg.rank <= 0) throw std::invalid_argument("svd_fit: rank must be positive");
  if (train.empty()) throw std::invalid_argument("svd_fit: empty training set");

  SvdModel m;
  m.rank = cfg.rank;
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(train.size());
  double mean = 0.0;
  for (const auto& d : train) {
    const auto si = m.student_index.try_emplace(d.sid, static_cast<int>(m.student_index.size())).first;
    const auto ci = m.course_index.try_emplace(d.cid, static_cast<int>(m.course_index.size())).first;
    pairs.emplace_back(si->second, ci->second);
    mean += d.grade;
  }
  mean /= static_cast<double>(train.size());

  const int k = cfg.rank;
  Rng rng(seed);
  // start factors near sqrt(mean/k) so the initial prediction sits at the
  // training mean; breaks the bilinear saddle quickly
  const double base = std::sqrt(std::max(mean, 0.25) / k);
  m.student_factors.resize(m.student_index.size() * static_cast<std::size_t>(k));
  m.course_factors.resize(m.course_index.size() * static_cast<std::size_t>(k));
  for (double& f : m.student_factors) f = base + 0.05 * rng.normal();
  for (double& f : m.course_factors) f = base + 0.05 * rng.normal();

  m.student_courses.resize(m.student_index.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    m.student_courses[pairs[i].first].push_back(pairs[i].second);
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const double lr = cfg.learning_rate;
  const double l2 = cfg.l2;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto [si, ci] = pairs[idx];
      double* u = m.student_factors.data() + static_cast<std::size_t>(si) * k;
      double* v = m.course_factors.data() + static_cast<std::size_t>(ci) * k;
      double pred = 0.0;
      for (int f = 0; f < k; ++f) pred += u[f] * v[f];
      const double err = train[idx].grade - pred;
      for (int f = 0; f < k; ++f) {
        const double uf = u[f];
        u[f] += lr * (err * v[f] - l2 * uf);
        v[f] += lr * (err * uf - l2 * v[f]);
      }
    }
  }
  return m;
}

namespace {

double dot_at(const std::vector<double>& m, int row, int k, const std::vector<double>& n, int row2) {
  const double* a = m.data() + static_cast<std::size_t>(row) * k;
  const double* b = n.data() + static_cast<std::size_t>(row2) * k;
  double s = 0.0;
  for (int f = 0; f < k; ++f) s += a[f] * b[f];
  return s;
}

double cosine(const std::vector<double>& m, int row, int row2, int k) {
  const double* a = m.data() + static_cast<std::size_t>(row) * k;
  const double* b = m.data() + static_cast<std::size_t>(row2) * k;
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (int f = 0; f < k; ++f) {
    ab += a[f] * b[f];
    aa += a[f] * a[f];
    bb += b[f] * b[f];
  }
  if (aa <= 0.0 || bb <= 0.0) return -1.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace

std::optional<double> svd_predict(const SvdModel& m, const std::string& sid,
                                  const std::string& cid) {
  const auto si = m.student_index.find(sid);
  const auto ci = m.course_index.find(cid);
  if (si == m.student_index.end() || ci == m.course_index.end()) return std::nullopt;
  return dot_at(m.student_factors, si->second, m.rank, m.course_factors, ci->second);
}

std::optional<double> svdknn_predict(const SvdModel& m, const std::string& sid,
                                     const std::string& cid) {
  const auto si = m.student_index.find(sid);
  const auto ci = m.course_index.find(cid);
  if (si == m.student_index.end() || ci == m.course_index.end()) {
    return svd_predict(m, sid, cid);
  }
  const auto& taken = m.student_courses[si->second];
  if (taken.empty()) return svd_predict(m, sid, cid);

  int best = -1;
  double best_cos = 0.0;
  for (int cand : taken) {
    if (cand == ci->second) {
      best = cand;  // self-similarity 1 is maximal
      break;
    }
    const double cs = cosine(m.course_factors, ci->second, cand, m.rank);
    if (best < 0 || cs > best_cos + 1e-15 || (std::abs(cs - best_cos) <= 1e-15 && cand < best)) {
      best = cand;
      best_cos = cs;
    }
  }
  return dot_at(m.student_factors, si->second, m.rank, m.course_factors, best);
}

}  // namespace nextgrade
