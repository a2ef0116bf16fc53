#include <algorithm>
#include <cmath>

#include "mvbridge/metrics.hpp"
#include "mvbridge/rng.hpp"

namespace mvbridge {

namespace {

constexpr int kKernel = 5;
constexpr int kScales = 3;
constexpr int kChannelsPerScale = 8;

struct Plane {
  int h = 0, w = 0, c = 0;
  std::vector<double> data;
  double at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)) * c + ch];
  }
};

Plane image_plane(const Image& img) {
  return {img.height, img.width, 3, img.data};
}

Plane downsample2(const Plane& in) {
  Plane out;
  out.h = std::max(1, in.h / 2);
  out.w = std::max(1, in.w / 2);
  out.c = in.c;
  out.data.resize(static_cast<std::size_t>(out.h) * out.w * out.c);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      for (int ch = 0; ch < out.c; ++ch)
        out.data[(static_cast<std::size_t>(y) * out.w + x) * out.c + ch] =
            0.25 * (in.at(2 * y, 2 * x, ch) + in.at(2 * y, 2 * x + 1, ch) + in.at(2 * y + 1, 2 * x, ch) +
                    in.at(2 * y + 1, 2 * x + 1, ch));
  return out;
}

// clamped-border "same" convolution + tanh
Plane conv_tanh(const Plane& in, const std::vector<double>& filters, const std::vector<double>& biases, int out_ch) {
  Plane out;
  out.h = in.h;
  out.w = in.w;
  out.c = out_ch;
  out.data.assign(static_cast<std::size_t>(out.h) * out.w * out_ch, 0.0);
  const int half = kKernel / 2;
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int f = 0; f < out_ch; ++f) {
        double acc = biases[static_cast<std::size_t>(f)];
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx)
            for (int ch = 0; ch < in.c; ++ch) {
              const std::size_t fi =
                  ((static_cast<std::size_t>(f) * kKernel + (dy + half)) * kKernel + (dx + half)) * in.c + ch;
              acc += filters[fi] * in.at(y + dy, x + dx, ch);
            }
        out.data[(static_cast<std::size_t>(y) * out.w + x) * out_ch + f] = std::tanh(acc);
      }
  return out;
}

// bilinear upsample back to (H, W)
Plane upsample_to(const Plane& in, int h, int w) {
  Plane out;
  out.h = h;
  out.w = w;
  out.c = in.c;
  out.data.resize(static_cast<std::size_t>(h) * w * in.c);
  const double fy = static_cast<double>(in.h) / h;
  const double fx = static_cast<double>(in.w) / w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sy = (y + 0.5) * fy - 0.5;
      const double sx = (x + 0.5) * fx - 0.5;
      const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
      const double ty = sy - y0, tx = sx - x0;
      for (int ch = 0; ch < in.c; ++ch) {
        const double a = in.at(y0, x0, ch), b = in.at(y0, x0 + 1, ch);
        const double c = in.at(y0 + 1, x0, ch), d = in.at(y0 + 1, x0 + 1, ch);
        out.data[(static_cast<std::size_t>(y) * w + x) * in.c + ch] =
            (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
      }
    }
  return out;
}

}  // namespace

std::vector<double> SemanticFeatureMap::sample(double x, double y) const {
  std::vector<double> out(static_cast<std::size_t>(channels), 0.0);
  const double cx = std::clamp(x, 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(std::floor(cx)), width - 1);
  const int y0 = std::min(static_cast<int>(std::floor(cy)), height - 1);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double tx = cx - x0, ty = cy - y0;
  for (int ch = 0; ch < channels; ++ch) {
    const auto v = [&](int yy, int xx) { return values[(static_cast<std::int64_t>(yy) * width + xx) * channels + ch]; };
    out[static_cast<std::size_t>(ch)] =
        (v(y0, x0) * (1 - tx) + v(y0, x1) * tx) * (1 - ty) + (v(y1, x0) * (1 - tx) + v(y1, x1) * tx) * ty;
  }
  return out;
}

SemanticFeatureMap semantic_features(const Image& image, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5e3a171c));
  // One filter bank per scale, frozen from the seed.
  std::vector<std::vector<double>> filters(kScales);
  std::vector<std::vector<double>> biases(kScales);
  for (int s = 0; s < kScales; ++s) {
    const int in_ch = 3;
    filters[static_cast<std::size_t>(s)].resize(
        static_cast<std::size_t>(kChannelsPerScale) * kKernel * kKernel * in_ch);
    const double bound = 1.0 / std::sqrt(static_cast<double>(kKernel * kKernel * in_ch));
    for (double& v : filters[static_cast<std::size_t>(s)]) v = rng.uniform(-bound, bound);
    biases[static_cast<std::size_t>(s)].resize(kChannelsPerScale);
    for (double& v : biases[static_cast<std::size_t>(s)]) v = rng.uniform(-0.2, 0.2);
  }

  SemanticFeatureMap map;
  map.height = image.height;
  map.width = image.width;
  map.channels = kScales * kChannelsPerScale;
  map.values = Tensor({image.height, image.width, map.channels});

  Plane level = image_plane(image);
  for (int s = 0; s < kScales; ++s) {
    const Plane feat = conv_tanh(level, filters[static_cast<std::size_t>(s)], biases[static_cast<std::size_t>(s)],
                                 kChannelsPerScale);
    const Plane full = (feat.h == image.height && feat.w == image.width)
                           ? feat
                           : upsample_to(feat, image.height, image.width);
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        for (int ch = 0; ch < kChannelsPerScale; ++ch)
          map.values[(static_cast<std::int64_t>(y) * image.width + x) * map.channels + s * kChannelsPerScale + ch] =
              full.data[(static_cast<std::size_t>(y) * full.w + x) * full.c + ch];
    if (s + 1 < kScales) level = downsample2(level);
  }
  return map;
}

}  // namespace mvbridge
