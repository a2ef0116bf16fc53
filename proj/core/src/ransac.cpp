#include "mvbridge/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvbridge/rng.hpp"

namespace mvbridge {

double sampson_distance(const Eigen::Matrix3d& f, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector3d xa(a.x(), a.y(), 1.0);
  const Eigen::Vector3d xb(b.x(), b.y(), 1.0);
  const Eigen::Vector3d fa = f * xa;
  const Eigen::Vector3d ftb = f.transpose() * xb;
  const double num = xb.dot(fa);
  const double denom = fa.x() * fa.x() + fa.y() * fa.y() + ftb.x() * ftb.x() + ftb.y() * ftb.y();
  if (denom < 1e-300) return std::numeric_limits<double>::infinity();
  return std::sqrt(num * num / denom);
}

namespace {

Eigen::Matrix3d hartley_transform(const std::vector<PointPair>& pairs, bool second, const std::vector<double>* weights) {
  double wsum = 0.0;
  Eigen::Vector2d centroid(0.0, 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    centroid += w * (second ? pairs[i].second : pairs[i].first);
    wsum += w;
  }
  centroid /= wsum;
  double scale_acc = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    scale_acc += w * ((second ? pairs[i].second : pairs[i].first) - centroid).norm();
  }
  const double mean_dist = scale_acc / wsum;
  const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return t;
}

Eigen::Matrix3d enforce_rank2(const Eigen::Matrix3d& f) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s.z() = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

bool nearly_collinear(const std::vector<PointPair>& pairs, const std::vector<int>& idx, bool second) {
  Eigen::Vector2d mean(0.0, 0.0);
  for (int i : idx) mean += second ? pairs[static_cast<std::size_t>(i)].second : pairs[static_cast<std::size_t>(i)].first;
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int i : idx) {
    const Eigen::Vector2d d = (second ? pairs[static_cast<std::size_t>(i)].second : pairs[static_cast<std::size_t>(i)].first) - mean;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  return es.eigenvalues()(0) < 1e-9 * std::max(es.eigenvalues()(1), 1e-12);
}

}  // namespace

std::optional<Eigen::Matrix3d> eight_point(const std::vector<PointPair>& pairs, const std::vector<double>* weights) {
  if (pairs.size() < 8) return std::nullopt;
  const Eigen::Matrix3d ta = hartley_transform(pairs, false, weights);
  const Eigen::Matrix3d tb = hartley_transform(pairs, true, weights);

  Eigen::MatrixXd a(static_cast<Eigen::Index>(pairs.size()), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d pa = ta * Eigen::Vector3d(pairs[i].first.x(), pairs[i].first.y(), 1.0);
    const Eigen::Vector3d pb = tb * Eigen::Vector3d(pairs[i].second.x(), pairs[i].second.y(), 1.0);
    const double w = weights ? std::sqrt(std::max(0.0, (*weights)[i])) : 1.0;
    a.row(static_cast<Eigen::Index>(i)) << w * pb.x() * pa.x(), w * pb.x() * pa.y(), w * pb.x(), w * pb.y() * pa.x(),
        w * pb.y() * pa.y(), w * pb.y(), w * pa.x(), w * pa.y(), w;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  if (svd.rank() < 1) return std::nullopt;
  const Eigen::VectorXd fvec = svd.matrixV().col(8);
  Eigen::Matrix3d fn;
  fn << fvec(0), fvec(1), fvec(2), fvec(3), fvec(4), fvec(5), fvec(6), fvec(7), fvec(8);
  fn = enforce_rank2(fn);

  Eigen::Matrix3d f = tb.transpose() * fn * ta;
  const double norm = f.norm();
  if (!std::isfinite(norm) || norm < 1e-300) return std::nullopt;
  return f / norm;
}

std::optional<RansacResult> estimate_fundamental_ransac(const std::vector<PointPair>& pairs, int iterations,
                                                        double threshold_px, std::uint64_t seed) {
  const std::size_t n = pairs.size();
  if (n < 8) return std::nullopt;

  // Canonical order so the seeded sample sequence does not depend on the
  // caller's match ordering.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const PointPair& p = pairs[static_cast<std::size_t>(i)];
    const PointPair& q = pairs[static_cast<std::size_t>(j)];
    const auto key = [](const PointPair& pp) {
      return std::tuple(pp.first.x(), pp.first.y(), pp.second.x(), pp.second.y());
    };
    return key(p) < key(q);
  });

  Rng rng(mix_seed(seed, 0x4a25ac));
  const auto count_inliers = [&](const Eigen::Matrix3d& f, std::vector<bool>* flags) {
    int count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in = sampson_distance(f, pairs[i].first, pairs[i].second) < threshold_px;
      if (flags) (*flags)[i] = in;
      count += in;
    }
    return count;
  };

  int best_count = -1;
  Eigen::Matrix3d best_f = Eigen::Matrix3d::Zero();
  std::vector<int> sample_idx(8);
  for (int it = 0; it < iterations; ++it) {
    bool have_sample = false;
    for (int attempt = 0; attempt < 50 && !have_sample; ++attempt) {
      // sample 8 distinct canonical indices
      std::vector<int> chosen;
      chosen.reserve(8);
      while (chosen.size() < 8) {
        const int c = order[static_cast<std::size_t>(rng.next_below(n))];
        if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
      }
      if (nearly_collinear(pairs, chosen, false) || nearly_collinear(pairs, chosen, true)) continue;
      sample_idx = chosen;
      have_sample = true;
    }
    if (!have_sample) continue;

    std::vector<PointPair> minimal;
    minimal.reserve(8);
    for (int i : sample_idx) minimal.push_back(pairs[static_cast<std::size_t>(i)]);
    const auto f = eight_point(minimal);
    if (!f) continue;
    const int count = count_inliers(*f, nullptr);
    if (count > best_count) {
      best_count = count;
      best_f = *f;
    }
  }
  if (best_count < 8) return std::nullopt;

  // Consensus refinement: iterate full refits until the inlier set is stable.
  std::vector<bool> flags(n, false);
  count_inliers(best_f, &flags);
  Eigen::Matrix3d f = best_f;
  for (int round = 0; round < 5; ++round) {
    std::vector<PointPair> support;
    for (std::size_t i = 0; i < n; ++i)
      if (flags[i]) support.push_back(pairs[i]);
    if (support.size() < 8) break;
    const auto refit = eight_point(support);
    if (!refit) break;
    std::vector<bool> new_flags(n, false);
    count_inliers(*refit, &new_flags);
    f = *refit;
    const bool stable = new_flags == flags;
    flags = std::move(new_flags);
    if (stable) break;
  }

  // MAD-trimmed polish: robust-scale trimming on the support residuals so a
  // borderline outlier that slipped under the threshold cannot tilt the fit.
  for (int round = 0; round < 3; ++round) {
    std::vector<std::size_t> support_idx;
    std::vector<double> residuals;
    for (std::size_t i = 0; i < n; ++i)
      if (flags[i]) {
        support_idx.push_back(i);
        residuals.push_back(sampson_distance(f, pairs[i].first, pairs[i].second));
      }
    if (support_idx.size() < 10) break;
    std::vector<double> sorted = residuals;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[sorted.size() / 2];
    std::vector<double> dev;
    dev.reserve(sorted.size());
    for (double r : residuals) dev.push_back(std::abs(r - med));
    std::sort(dev.begin(), dev.end());
    const double mad = dev[dev.size() / 2];
    const double sigma = std::max(1.4826 * mad, 1e-12);
    const double cut = std::max(6.0 * sigma, 1e-9);

    std::vector<PointPair> trimmed;
    for (std::size_t k = 0; k < support_idx.size(); ++k)
      if (residuals[k] <= cut) trimmed.push_back(pairs[support_idx[k]]);
    if (trimmed.size() < 8 || trimmed.size() == support_idx.size()) break;
    const auto refit = eight_point(trimmed);
    if (!refit) break;
    f = *refit;
    count_inliers(f, &flags);
  }

  RansacResult result;
  result.fundamental = f;
  result.inliers = flags;
  result.inlier_count = count_inliers(f, &result.inliers);
  if (result.inlier_count < 8) return std::nullopt;
  return result;
}

}  // namespace mvbridge
