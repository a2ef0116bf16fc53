#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvbridge/image.hpp"
#include "mvbridge/ransac.hpp"
#include "mvbridge/tensor.hpp"

namespace mvbridge {

// Dense per-pixel feature grid with the same spatial support as the image;
// bilinear-samplable at sub-pixel locations.
struct SemanticFeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  Tensor values;  // (H, W, C)

  std::vector<double> sample(double x, double y) const;
};

// Fixed seeded multi-scale filter bank: 5x5 convolutions with clamped
// borders and tanh, at full, half and quarter resolution, upsampled back and
// concatenated. Constant images map to spatially constant features.
SemanticFeatureMap semantic_features(const Image& image, std::uint64_t seed = 17);

struct CvscConfig {
  int max_keypoints = 300;
  double detect_threshold = 0.01;
  double match_ratio = 0.9;
  int ransac_iterations = kDefaultRansacIterations;
  double sampson_threshold_px = kDefaultSampsonThresholdPx;
  std::uint64_t ransac_seed = 7;
  std::uint64_t feature_seed = 17;
  int min_inliers = 8;
};

struct PairScore {
  bool skipped = true;
  std::string skip_reason;
  double score = 0.0;
  int match_count = 0;
  int inlier_count = 0;
};

// Mean cosine similarity of features sampled at verified correspondences.
// Zero-norm feature vectors contribute similarity 0.
double mean_feature_cosine(const SemanticFeatureMap& features_a, const SemanticFeatureMap& features_b,
                           const std::vector<PointPair>& correspondences);

// detect -> match -> RANSAC-verify -> feature cosine at inlier keypoints.
// Pairs with fewer than min_inliers verified correspondences are skipped
// with a reason, never scored zero.
PairScore cvsc_pair(const Image& image_a, const Image& image_b, const CvscConfig& config = {});

struct CvscReport {
  std::vector<PairScore> pairs;  // adjacent (i, i+1) in input order
  std::optional<double> aggregate;
  int skipped = 0;
};

CvscReport cvsc_sequence(const std::vector<Image>& images, const CvscConfig& config = {});

inline constexpr double kPsnrCapDb = 99.0;

// 10 log10(1/MSE) on unit dynamic range, capped at 99 dB.
double psnr(const Image& pred, const Image& target);

// Mean SSIM over sliding 8x8 box windows and channels, C1=(0.01)^2,
// C2=(0.03)^2 on unit dynamic range.
double ssim(const Image& pred, const Image& target);

}  // namespace mvbridge
