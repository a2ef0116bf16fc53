#include "mvbridge/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvbridge {

namespace {

constexpr double kHarrisK = 0.04;
constexpr int kNmsRadius = 4;
constexpr int kBorder = 6;
constexpr int kPatch = 11;

double sample_clamped(const std::vector<double>& gray, int h, int w, int y, int x) {
  return gray[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
}

double bilinear(const std::vector<double>& gray, int h, int w, double y, double x) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0, ty = y - y0;
  const double a = sample_clamped(gray, h, w, y0, x0);
  const double b = sample_clamped(gray, h, w, y0, x0 + 1);
  const double c = sample_clamped(gray, h, w, y0 + 1, x0);
  const double d = sample_clamped(gray, h, w, y0 + 1, x0 + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const Image& image, int max_count, double threshold) {
  const int h = image.height, w = image.width;
  const std::vector<double> gray = to_gray(image);

  std::vector<double> gx(gray.size(), 0.0), gy(gray.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto g = [&](int yy, int xx) { return sample_clamped(gray, h, w, yy, xx); };
      gx[static_cast<std::size_t>(y) * w + x] = (g(y - 1, x + 1) + 2 * g(y, x + 1) + g(y + 1, x + 1)) -
                                                (g(y - 1, x - 1) + 2 * g(y, x - 1) + g(y + 1, x - 1));
      gy[static_cast<std::size_t>(y) * w + x] = (g(y + 1, x - 1) + 2 * g(y + 1, x) + g(y + 1, x + 1)) -
                                                (g(y - 1, x - 1) + 2 * g(y - 1, x) + g(y - 1, x + 1));
    }

  // Structure tensor smoothed with the separable binomial window 1 4 6 4 1.
  static constexpr double kWin[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
  std::vector<double> response(gray.size(), 0.0);
  double max_response = 0.0;
  for (int y = kBorder; y < h - kBorder; ++y)
    for (int x = kBorder; x < w - kBorder; ++x) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const double wgt = kWin[dy + 2] * kWin[dx + 2];
          const std::size_t idx = static_cast<std::size_t>(y + dy) * w + (x + dx);
          sxx += wgt * gx[idx] * gx[idx];
          sxy += wgt * gx[idx] * gy[idx];
          syy += wgt * gy[idx] * gy[idx];
        }
      const double det = sxx * syy - sxy * sxy;
      const double tr = sxx + syy;
      const double r = det - kHarrisK * tr * tr;
      response[static_cast<std::size_t>(y) * w + x] = r;
      max_response = std::max(max_response, r);
    }
  if (max_response <= 0.0) return {};

  const double cutoff = std::max(threshold * max_response, 1e-12);
  std::vector<Keypoint> kps;
  for (int y = kBorder; y < h - kBorder; ++y)
    for (int x = kBorder; x < w - kBorder; ++x) {
      const double r = response[static_cast<std::size_t>(y) * w + x];
      if (r < cutoff) continue;
      bool is_max = true;
      for (int dy = -kNmsRadius; dy <= kNmsRadius && is_max; ++dy)
        for (int dx = -kNmsRadius; dx <= kNmsRadius && is_max; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const double rn = response[static_cast<std::size_t>(ny) * w + nx];
          if (rn > r || (rn == r && (ny * w + nx) < (y * w + x))) is_max = false;
        }
      if (!is_max) continue;

      // quadratic sub-pixel refinement along each axis
      auto refine = [&](double rm, double r0, double rp) {
        const double denom = rm - 2.0 * r0 + rp;
        if (std::abs(denom) < 1e-18) return 0.0;
        return std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
      };
      const double ox = refine(response[static_cast<std::size_t>(y) * w + (x - 1)], r,
                               response[static_cast<std::size_t>(y) * w + (x + 1)]);
      const double oy = refine(response[static_cast<std::size_t>(y - 1) * w + x], r,
                               response[static_cast<std::size_t>(y + 1) * w + x]);
      kps.push_back({x + ox, y + oy, r});
    }

  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (static_cast<int>(kps.size()) > max_count) kps.resize(static_cast<std::size_t>(max_count));
  return kps;
}

std::vector<double> patch_descriptor(const std::vector<double>& gray, int height, int width, double x, double y) {
  std::vector<double> desc(kPatch * kPatch);
  const int half = kPatch / 2;
  double mean = 0.0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) {
      const double v = bilinear(gray, height, width, y + dy, x + dx);
      desc[static_cast<std::size_t>(dy + half) * kPatch + (dx + half)] = v;
      mean += v;
    }
  mean /= static_cast<double>(desc.size());
  double norm2 = 0.0;
  for (double& v : desc) {
    v -= mean;
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  if (norm < 1e-12) {
    std::fill(desc.begin(), desc.end(), 0.0);
    return desc;
  }
  for (double& v : desc) v /= norm;
  return desc;
}

std::vector<Match> match_keypoints(const Image& image_a, const Image& image_b, const std::vector<Keypoint>& kps_a,
                                   const std::vector<Keypoint>& kps_b, double ratio) {
  if (kps_a.empty() || kps_b.empty()) return {};
  const std::vector<double> gray_a = to_gray(image_a);
  const std::vector<double> gray_b = to_gray(image_b);

  std::vector<std::vector<double>> desc_a, desc_b;
  desc_a.reserve(kps_a.size());
  desc_b.reserve(kps_b.size());
  for (const Keypoint& kp : kps_a) desc_a.push_back(patch_descriptor(gray_a, image_a.height, image_a.width, kp.x, kp.y));
  for (const Keypoint& kp : kps_b) desc_b.push_back(patch_descriptor(gray_b, image_b.height, image_b.width, kp.x, kp.y));

  auto dist2 = [](const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - v[i]) * (u[i] - v[i]);
    return acc;
  };

  const auto nearest = [&](const std::vector<double>& d, const std::vector<std::vector<double>>& pool) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const double dd = dist2(d, pool[j]);
      if (dd < best_d) {
        second = best_d;
        best_d = dd;
        best = static_cast<int>(j);
      } else if (dd < second) {
        second = dd;
      }
    }
    return std::tuple<int, double, double>(best, best_d, second);
  };

  std::vector<Match> matches;
  for (std::size_t i = 0; i < desc_a.size(); ++i) {
    const auto [j, dij, second] = nearest(desc_a[i], desc_b);
    if (j < 0) continue;
    // Lowe ratio on L2 distances
    if (std::isfinite(second) && std::sqrt(dij) >= ratio * std::sqrt(second)) continue;
    const auto [back, dji, second_b] = nearest(desc_b[static_cast<std::size_t>(j)], desc_a);
    (void)dji;
    (void)second_b;
    if (back != static_cast<int>(i)) continue;
    matches.push_back({static_cast<int>(i), j, std::sqrt(dij)});
  }
  return matches;
}

}  // namespace mvbridge
