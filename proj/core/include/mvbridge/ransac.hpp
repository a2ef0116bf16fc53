#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace mvbridge {

using PointPair = std::pair<Eigen::Vector2d, Eigen::Vector2d>;

// First-order geometric deviation from the epipolar constraint, in pixels.
double sampson_distance(const Eigen::Matrix3d& f, const Eigen::Vector2d& a, const Eigen::Vector2d& b);

// Normalized (Hartley) eight-point solve over >= 8 correspondences, with
// optional per-point weights; rank-2 is enforced by zeroing the smallest
// singular value. Returns nullopt on degenerate inputs.
std::optional<Eigen::Matrix3d> eight_point(const std::vector<PointPair>& pairs, const std::vector<double>* weights = nullptr);

struct RansacResult {
  Eigen::Matrix3d fundamental = Eigen::Matrix3d::Zero();
  std::vector<bool> inliers;  // aligned with the input pair order
  int inlier_count = 0;
};

// Seeded RANSAC around the normalized eight-point solver. Candidate inliers
// use the Sampson distance at `threshold_px`; the winning consensus is
// refined by iterated refits plus a MAD-trimmed polish so that exact inliers
// are not dragged by borderline chance-aligned outliers. Pairs are sorted
// canonically before sampling, making the result a pure function of
// (pairs-as-set, iterations, threshold, seed). Returns nullopt for fewer
// than 8 pairs.
std::optional<RansacResult> estimate_fundamental_ransac(const std::vector<PointPair>& pairs, int iterations,
                                                        double threshold_px, std::uint64_t seed);

inline constexpr int kDefaultRansacIterations = 2000;
inline constexpr double kDefaultSampsonThresholdPx = 1.0;

}  // namespace mvbridge
