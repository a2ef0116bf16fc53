#pragma once

#include <cstdint>
#include <vector>

#include "mvbridge/image.hpp"
#include "mvbridge/tape.hpp"
#include "mvbridge/tensor.hpp"

namespace mvbridge {

// Fixed (non-trainable) convolutional filter bank standing in for a
// pretrained perceptual backbone. Two stride-2 valid convolutions with a
// GELU in between; weights are frozen at construction from the seed and the
// application is differentiable w.r.t. the input image.
class FeatureExtractor {
 public:
  static constexpr int kKernel = 5;
  static constexpr int kStride = 2;

  explicit FeatureExtractor(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Per-scale feature maps (h_s, w_s, c_s) for an (H, W, 3) image node.
  std::vector<Tape::Id> apply(Tape& tape, Tape::Id image) const;

  // Plain evaluation for non-training callers.
  std::vector<Tensor> features(const Image& image) const;

 private:
  std::uint64_t seed_;
  std::vector<Tensor> filters_;  // (k*k*in, out) per scale
  std::vector<Tensor> biases_;   // (out) per scale
};

// Channel-correlation Gram matrix of an (n, c) feature matrix, normalized
// by the spatial element count n.
Tensor gram_matrix(const Tensor& features);

// Mean absolute difference over all views/pixels/channels.
Tape::Id pixel_l1(Tape& tape, const std::vector<Tape::Id>& pred, const std::vector<Tape::Id>& target);
double pixel_l1(const std::vector<Image>& pred, const std::vector<Image>& target);

// Mean squared feature difference per scale, summed over scales.
Tape::Id perceptual_loss(Tape& tape, const FeatureExtractor& extractor, const std::vector<Tape::Id>& pred,
                         const std::vector<Tape::Id>& target);
double perceptual_loss(const FeatureExtractor& extractor, const std::vector<Image>& pred,
                       const std::vector<Image>& target);

// Mean squared difference of normalized Gram matrices, summed over scales.
Tape::Id gram_loss(Tape& tape, const FeatureExtractor& extractor, const std::vector<Tape::Id>& pred,
                   const std::vector<Tape::Id>& target);
double gram_loss(const FeatureExtractor& extractor, const std::vector<Image>& pred, const std::vector<Image>& target);

inline constexpr double kDefaultLambdaLpips = 10.0;
inline constexpr double kDefaultLambdaGram = 0.1;

// Weighted sum of the four components; components are norms and must be
// non-negative.
double total_loss(double flow, double pixel, double lpips, double gram, double lambda_lpips = kDefaultLambdaLpips,
                  double lambda_gram = kDefaultLambdaGram);

}  // namespace mvbridge
