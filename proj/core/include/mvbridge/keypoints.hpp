#pragma once

#include <vector>

#include "mvbridge/image.hpp"

namespace mvbridge {

struct Keypoint {
  double x = 0.0;  // sub-pixel column
  double y = 0.0;  // sub-pixel row
  double response = 0.0;
};

// Harris corners (k=0.04, 3x3 Sobel, 5x5 binomial window), non-maximum
// suppressed with Chebyshev radius 4 px and refined to sub-pixel by a
// quadratic fit. `threshold` is relative to the maximum response. Detection
// skips a 6 px border band so descriptor patches always fit.
std::vector<Keypoint> detect_keypoints(const Image& image, int max_count = 300, double threshold = 0.01);

struct Match {
  int index_a = 0;
  int index_b = 0;
  double distance = 0.0;
};

// 11x11 mean-removed, L2-normalized gray patches; zero-norm patches give a
// zero descriptor.
std::vector<double> patch_descriptor(const std::vector<double>& gray, int height, int width, double x, double y);

// Mutual nearest neighbours passing a Lowe ratio test (< 0.9). Each
// keypoint appears in at most one match.
std::vector<Match> match_keypoints(const Image& image_a, const Image& image_b, const std::vector<Keypoint>& kps_a,
                                   const std::vector<Keypoint>& kps_b, double ratio = 0.9);

}  // namespace mvbridge
