#pragma once

// Shared test utilities: the finite-difference oracle and small input
// factories. The straight-line PSNR/SSIM oracles live in the tests that
// freeze them so they stay independent of the library implementation.

#include <cmath>
#include <functional>
#include <vector>

#include "mvbridge/image.hpp"
#include "mvbridge/rng.hpp"
#include "mvbridge/tensor.hpp"

namespace testsupport {

// Central finite differences with step h on every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Relative error with a small floor so near-zero coordinates are compared
// at an effective absolute tolerance of floor * tol.
inline double rel_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, rel_error(analytic[i], numeric[i]));
  return worst;
}

inline mvbridge::Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed, double bound = 1.0) {
  mvbridge::Rng rng(seed);
  return mvbridge::Tensor::uniform(std::move(shape), bound, rng);
}

// Noise-textured image: unique local patches, friendly to the keypoint
// pipeline.
inline mvbridge::Image noise_image(int height, int width, std::uint64_t seed) {
  mvbridge::Rng rng(seed);
  mvbridge::Image img(height, width);
  for (double& v : img.data) v = rng.uniform();
  return mvbridge::quantize(img);
}

inline double max_abs_diff(const mvbridge::Tensor& a, const mvbridge::Tensor& b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline bool bit_equal(const mvbridge::Tensor& a, const mvbridge::Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::int64_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline bool bit_equal(const mvbridge::Image& a, const mvbridge::Image& b) {
  return a.height == b.height && a.width == b.width && a.data == b.data;
}

}  // namespace testsupport
