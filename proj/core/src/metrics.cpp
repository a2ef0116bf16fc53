#include "mvbridge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvbridge/keypoints.hpp"

namespace mvbridge {

double mean_feature_cosine(const SemanticFeatureMap& features_a, const SemanticFeatureMap& features_b,
                           const std::vector<PointPair>& correspondences) {
  if (correspondences.empty()) throw std::invalid_argument("mean_feature_cosine: no correspondences");
  double acc = 0.0;
  for (const PointPair& pair : correspondences) {
    const std::vector<double> fa = features_a.sample(pair.first.x(), pair.first.y());
    const std::vector<double> fb = features_b.sample(pair.second.x(), pair.second.y());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      dot += fa[i] * fb[i];
      na += fa[i] * fa[i];
      nb += fb[i] * fb[i];
    }
    if (na < 1e-24 || nb < 1e-24) continue;  // zero-norm features contribute 0
    acc += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return std::clamp(acc / static_cast<double>(correspondences.size()), -1.0, 1.0);
}

PairScore cvsc_pair(const Image& image_a, const Image& image_b, const CvscConfig& config) {
  PairScore result;

  const auto kps_a = detect_keypoints(image_a, config.max_keypoints, config.detect_threshold);
  const auto kps_b = detect_keypoints(image_b, config.max_keypoints, config.detect_threshold);
  if (static_cast<int>(kps_a.size()) < config.min_inliers || static_cast<int>(kps_b.size()) < config.min_inliers) {
    result.skip_reason = "too few keypoints";
    return result;
  }

  const auto matches = match_keypoints(image_a, image_b, kps_a, kps_b, config.match_ratio);
  result.match_count = static_cast<int>(matches.size());
  if (result.match_count < config.min_inliers) {
    result.skip_reason = "too few matches";
    return result;
  }

  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const Match& m : matches)
    pairs.emplace_back(Eigen::Vector2d(kps_a[static_cast<std::size_t>(m.index_a)].x,
                                       kps_a[static_cast<std::size_t>(m.index_a)].y),
                       Eigen::Vector2d(kps_b[static_cast<std::size_t>(m.index_b)].x,
                                       kps_b[static_cast<std::size_t>(m.index_b)].y));

  const auto ransac =
      estimate_fundamental_ransac(pairs, config.ransac_iterations, config.sampson_threshold_px, config.ransac_seed);
  if (!ransac || ransac->inlier_count < config.min_inliers) {
    result.skip_reason = "too few verified inliers";
    return result;
  }
  result.inlier_count = ransac->inlier_count;

  std::vector<PointPair> verified;
  verified.reserve(static_cast<std::size_t>(ransac->inlier_count));
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (ransac->inliers[i]) verified.push_back(pairs[i]);

  const SemanticFeatureMap fa = semantic_features(image_a, config.feature_seed);
  const SemanticFeatureMap fb = semantic_features(image_b, config.feature_seed);
  result.score = mean_feature_cosine(fa, fb, verified);
  result.skipped = false;
  return result;
}

CvscReport cvsc_sequence(const std::vector<Image>& images, const CvscConfig& config) {
  if (images.size() < 2) throw std::invalid_argument("cvsc_sequence: need at least two images");
  CvscReport report;
  double acc = 0.0;
  int scored = 0;
  for (std::size_t i = 0; i + 1 < images.size(); ++i) {
    PairScore score = cvsc_pair(images[i], images[i + 1], config);
    if (score.skipped) {
      report.skipped += 1;
    } else {
      acc += score.score;
      scored += 1;
    }
    report.pairs.push_back(std::move(score));
  }
  if (scored > 0) report.aggregate = acc / scored;
  return report;
}

namespace {

void check_metric_inputs(const Image& pred, const Image& target, const char* what) {
  if (!pred.same_shape(target))
    throw std::invalid_argument(std::string(what) + ": image shapes differ (" + std::to_string(pred.width) + "x" +
                                std::to_string(pred.height) + " vs " + std::to_string(target.width) + "x" +
                                std::to_string(target.height) + ")");
  for (const Image* img : {&pred, &target})
    for (double v : img->data)
      if (v < -1e-9 || v > 1.0 + 1e-9) throw std::invalid_argument(std::string(what) + ": values outside [0,1]");
}

}  // namespace

double psnr(const Image& pred, const Image& target) {
  check_metric_inputs(pred, target, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.data.size());
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(10.0 * std::log10(1.0 / mse), kPsnrCapDb);
}

double ssim(const Image& pred, const Image& target) {
  check_metric_inputs(pred, target, "ssim");
  constexpr int kWindow = 8;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int h = pred.height, w = pred.width;
  if (h < kWindow || w < kWindow)
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(kWindow) + "x" +
                                std::to_string(kWindow) + " window");

  const double inv_n = 1.0 / (kWindow * kWindow);
  double acc = 0.0;
  std::int64_t windows = 0;
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y + kWindow <= h; ++y)
      for (int x = 0; x + kWindow <= w; ++x) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int dy = 0; dy < kWindow; ++dy)
          for (int dx = 0; dx < kWindow; ++dx) {
            const double a = pred.at(y + dy, x + dx, ch);
            const double b = target.at(y + dy, x + dx, ch);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
          }
        const double mx = sx * inv_n, my = sy * inv_n;
        const double vx = sxx * inv_n - mx * mx;
        const double vy = syy * inv_n - my * my;
        const double cov = sxy * inv_n - mx * my;
        acc += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        windows += 1;
      }
  return acc / static_cast<double>(windows);
}

}  // namespace mvbridge
