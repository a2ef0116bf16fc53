#include "mvbridge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mvbridge/rng.hpp"

namespace mvbridge {

namespace {

constexpr std::uint64_t kSceneStream = 0x5c33e001;
constexpr std::uint64_t kFloaterStream = 0xf10a7e55;
constexpr std::uint64_t kRegionStream = 0xb10bb107;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix_seed(seed, mix_seed(static_cast<std::uint64_t>(ix) * 0x9e3779b1u,
                                                  static_cast<std::uint64_t>(iy) + 0x7f4a7c15u));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smoothly interpolated lattice noise in [0,1].
double value_noise(std::uint64_t seed, double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto ix = static_cast<std::int64_t>(fu), iy = static_cast<std::int64_t>(fv);
  const double tu = smoothstep(u - fu), tv = smoothstep(v - fv);
  const double a = lattice_value(seed, ix, iy);
  const double b = lattice_value(seed, ix + 1, iy);
  const double c = lattice_value(seed, ix, iy + 1);
  const double d = lattice_value(seed, ix + 1, iy + 1);
  return (a * (1 - tu) + b * tu) * (1 - tv) + (c * (1 - tu) + d * tu) * tv;
}

double fbm(std::uint64_t seed, double u, double v, int octaves) {
  double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise(mix_seed(seed, static_cast<std::uint64_t>(o)), u * freq, v * freq);
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum / norm;
}

std::array<double, 3> lerp_color(const std::array<double, 3>& a, const std::array<double, 3>& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

std::array<double, 3> random_color(Rng& rng, double lo = 0.08, double hi = 0.95) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

struct Rect {
  int x0, y0, x1, y1;  // half-open
};

Rect random_rect(Rng& rng, int height, int width, double min_frac, double max_frac) {
  const int rw = std::max(2, static_cast<int>(width * rng.uniform(min_frac, max_frac)));
  const int rh = std::max(2, static_cast<int>(height * rng.uniform(min_frac, max_frac)));
  const int x0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::max(1, width - rw))));
  const int y0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::max(1, height - rh))));
  return {x0, y0, std::min(width, x0 + rw), std::min(height, y0 + rh)};
}

// Severity schedule, monotone in expected pixel perturbation.
struct SeverityParams {
  int floater_count;
  double floater_opacity;
  int blur_regions;
  int blur_width;
  int dropout_count;
  double haze_strength;
};

SeverityParams severity_params(int severity) {
  static constexpr SeverityParams kTable[kMaxSeverity + 1] = {
      {0, 0.00, 0, 3, 0, 0.00},   // 0: identity
      {2, 0.35, 1, 3, 0, 0.02},   // 1
      {4, 0.45, 1, 5, 1, 0.05},   // 2
      {6, 0.55, 2, 5, 1, 0.08},   // 3
      {9, 0.65, 2, 7, 2, 0.12},   // 4
      {12, 0.75, 3, 9, 2, 0.16},  // 5
  };
  return kTable[severity];
}

}  // namespace

double Scene::min_depth() const {
  double d = layers.front().depth;
  for (const Layer& l : layers) d = std::min(d, l.depth);
  return d;
}

double Scene::mean_depth() const {
  double d = 0.0;
  for (const Layer& l : layers) d += l.depth;
  return d / static_cast<double>(layers.size());
}

int severity_for_sparsity(int training_views) {
  if (training_views <= 6) return 5;
  if (training_views <= 8) return 4;
  if (training_views <= 10) return 3;
  if (training_views <= 12) return 2;
  return 1;  // 16 and 32 views both map to the mildest non-zero grade
}

Scene generate_scene(std::uint64_t seed) {
  Rng rng(mix_seed(seed, kSceneStream));
  Scene scene;
  scene.seed = seed;

  const int n_layers = 2 + static_cast<int>(rng.next_below(2));  // 2 or 3
  // Far-to-near depths with a guaranteed gap so parallax is measurable.
  std::vector<double> depths;
  double d = rng.uniform(5.2, 6.5);
  depths.push_back(d);
  for (int i = 1; i < n_layers; ++i) {
    d = d - rng.uniform(1.0, 1.8);
    depths.push_back(d);
  }

  for (int i = 0; i < n_layers; ++i) {
    Layer layer;
    layer.depth = depths[static_cast<std::size_t>(i)];
    if (i == 0) {
      // Backdrop covers the whole frustum.
      layer.half_u = layer.half_v = 0.85 * layer.depth;
      layer.center_u = layer.center_v = 0.0;
    } else {
      layer.half_u = layer.depth * rng.uniform(0.12, 0.30);
      layer.half_v = layer.depth * rng.uniform(0.12, 0.30);
      layer.center_u = layer.depth * rng.uniform(-0.25, 0.25);
      layer.center_v = layer.depth * rng.uniform(-0.25, 0.25);
    }

    TextureSpec& tex = layer.texture;
    const auto kind = rng.next_below(3);
    tex.kind = kind == 0 ? TextureKind::kChecker : (kind == 1 ? TextureKind::kNoise : TextureKind::kSprites);
    tex.scale = rng.uniform(0.25, 0.9) * (i == 0 ? 1.6 : 1.0);
    tex.phase_u = rng.uniform(0.0, 1.0);
    tex.phase_v = rng.uniform(0.0, 1.0);
    tex.color_a = random_color(rng);
    tex.color_b = random_color(rng);
    tex.octaves = 2 + static_cast<int>(rng.next_below(3));
    tex.noise_seed = rng.next_u64();
    if (tex.kind == TextureKind::kSprites) {
      const int n_sprites = 3 + static_cast<int>(rng.next_below(4));
      for (int s = 0; s < n_sprites; ++s) {
        Sprite sp;
        sp.u = rng.uniform(-0.8, 0.8) * layer.half_u;
        sp.v = rng.uniform(-0.8, 0.8) * layer.half_v;
        sp.radius = rng.uniform(0.08, 0.22) * std::min(layer.half_u, layer.half_v);
        sp.color = random_color(rng);
        sp.square = rng.next_below(2) == 1;
        tex.sprites.push_back(sp);
      }
    }
    scene.layers.push_back(layer);
  }
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"seed\":" << scene.seed << ",\"layers\":[";
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    const Layer& l = scene.layers[i];
    const TextureSpec& t = l.texture;
    if (i) os << ",";
    os << "{\"depth\":" << l.depth << ",\"center\":[" << l.center_u << "," << l.center_v << "]"
       << ",\"half\":[" << l.half_u << "," << l.half_v << "]"
       << ",\"kind\":" << static_cast<int>(t.kind) << ",\"scale\":" << t.scale << ",\"phase\":[" << t.phase_u << ","
       << t.phase_v << "]"
       << ",\"color_a\":[" << t.color_a[0] << "," << t.color_a[1] << "," << t.color_a[2] << "]"
       << ",\"color_b\":[" << t.color_b[0] << "," << t.color_b[1] << "," << t.color_b[2] << "]"
       << ",\"octaves\":" << t.octaves << ",\"noise_seed\":" << t.noise_seed << ",\"sprites\":" << t.sprites.size()
       << "}";
  }
  os << "]}";
  return os.str();
}

std::array<double, 3> texture_color(const TextureSpec& spec, double u, double v) {
  switch (spec.kind) {
    case TextureKind::kChecker: {
      const auto iu = static_cast<std::int64_t>(std::floor((u - spec.phase_u) / spec.scale));
      const auto iv = static_cast<std::int64_t>(std::floor((v - spec.phase_v) / spec.scale));
      return ((iu + iv) & 1) ? spec.color_b : spec.color_a;
    }
    case TextureKind::kNoise: {
      const double n = fbm(spec.noise_seed, (u + spec.phase_u) / spec.scale, (v + spec.phase_v) / spec.scale,
                           spec.octaves);
      return lerp_color(spec.color_a, spec.color_b, n);
    }
    case TextureKind::kSprites: {
      std::array<double, 3> c = spec.color_a;
      for (const Sprite& sp : spec.sprites) {
        const double du = u - sp.u, dv = v - sp.v;
        const bool inside = sp.square ? (std::abs(du) <= sp.radius && std::abs(dv) <= sp.radius)
                                      : (du * du + dv * dv <= sp.radius * sp.radius);
        if (inside) c = sp.color;
      }
      return c;
    }
  }
  return spec.color_a;
}

Image render_view(const Scene& scene, const Camera& camera, int height, int width) {
  if (scene.layers.empty()) throw std::invalid_argument("render_view: empty scene");
  const Eigen::Vector3d c = camera.center();
  for (const Layer& l : scene.layers)
    if (c.z() >= l.depth - 1e-6)
      throw std::invalid_argument("render_view: camera at z=" + std::to_string(c.z()) +
                                  " is not in front of layer at depth " + std::to_string(l.depth));

  std::vector<const Layer*> order;
  for (const Layer& l : scene.layers) order.push_back(&l);
  std::sort(order.begin(), order.end(), [](const Layer* a, const Layer* b) { return a->depth > b->depth; });

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d dir = camera.pixel_ray(x + 0.5, y + 0.5);
      // Background: mild vertical gradient so empty pixels stay deterministic.
      const double bg = 0.10 + 0.06 * (static_cast<double>(y) + 0.5) / height;
      std::array<double, 3> color{bg, bg, bg + 0.02};
      for (const Layer* l : order) {
        if (dir.z() <= 1e-12) continue;
        const double s = (l->depth - c.z()) / dir.z();
        if (s <= 0.0) continue;
        const double wu = c.x() + s * dir.x();
        const double wv = c.y() + s * dir.y();
        if (std::abs(wu - l->center_u) <= l->half_u && std::abs(wv - l->center_v) <= l->half_v)
          color = texture_color(l->texture, wu - l->center_u, wv - l->center_v);
      }
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = quantize_unit(color[static_cast<std::size_t>(ch)]);
    }
  }
  return img;
}

std::vector<Eigen::Vector3d> floater_anchors(const CorruptionSpec& spec) {
  const SeverityParams params = severity_params(spec.severity);
  Rng rng(mix_seed(mix_seed(spec.seed, kFloaterStream), static_cast<std::uint64_t>(spec.split_id)));
  std::vector<Eigen::Vector3d> anchors;
  anchors.reserve(static_cast<std::size_t>(params.floater_count));
  for (int i = 0; i < params.floater_count; ++i)
    anchors.emplace_back(rng.uniform(-2.2, 2.2), rng.uniform(-2.2, 2.2), rng.uniform(1.2, 4.4));
  return anchors;
}

Image corrupt(const Image& image, const Camera& camera, const CorruptionSpec& spec) {
  if (spec.severity < 0 || spec.severity > kMaxSeverity)
    throw std::invalid_argument("corrupt: severity " + std::to_string(spec.severity) + " outside [0," +
                                std::to_string(kMaxSeverity) + "]");
  if (spec.severity == 0) return image;

  const SeverityParams params = severity_params(spec.severity);
  Image out = image;
  const int h = image.height, w = image.width;

  if (spec.floaters) {
    // One style stream per (seed, split) so blob appearance matches anchors.
    Rng style(mix_seed(mix_seed(spec.seed, kFloaterStream + 1), static_cast<std::uint64_t>(spec.split_id)));
    const auto anchors = floater_anchors(spec);
    for (const Eigen::Vector3d& anchor : anchors) {
      const double sigma_world = style.uniform(0.05, 0.14);
      const std::array<double, 3> color = random_color(style, 0.25, 0.9);
      double depth = 0.0;
      const auto px = camera.project(anchor, &depth);
      if (!px || depth < 0.25) continue;
      const double sigma_px = sigma_world * camera.K(0, 0) / depth;
      const double reach = 3.0 * sigma_px;
      const int x0 = std::max(0, static_cast<int>(std::floor(px->x() - reach)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(px->x() + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(px->y() - reach)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(px->y() + reach)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dx = x + 0.5 - px->x(), dy = y + 0.5 - px->y();
          const double weight = params.floater_opacity * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_px * sigma_px));
          for (int ch = 0; ch < 3; ++ch)
            out.at(y, x, ch) = (1.0 - weight) * out.at(y, x, ch) + weight * color[static_cast<std::size_t>(ch)];
        }
    }
  }

  Rng regions(mix_seed(mix_seed(spec.seed, kRegionStream), static_cast<std::uint64_t>(spec.split_id)));

  if (spec.local_blur) {
    for (int r = 0; r < params.blur_regions; ++r) {
      const Rect rect = random_rect(regions, h, w, 0.2, 0.45);
      const int k = params.blur_width;  // odd box width
      const int half = k / 2;
      Image snap = out;
      // horizontal pass
      for (int y = rect.y0; y < rect.y1; ++y)
        for (int x = rect.x0; x < rect.x1; ++x)
          for (int ch = 0; ch < 3; ++ch) {
            double acc = 0.0;
            for (int o = -half; o <= half; ++o) acc += snap.at(y, std::clamp(x + o, 0, w - 1), ch);
            out.at(y, x, ch) = acc / k;
          }
      snap = out;
      // vertical pass
      for (int y = rect.y0; y < rect.y1; ++y)
        for (int x = rect.x0; x < rect.x1; ++x)
          for (int ch = 0; ch < 3; ++ch) {
            double acc = 0.0;
            for (int o = -half; o <= half; ++o) acc += snap.at(std::clamp(y + o, 0, h - 1), x, ch);
            out.at(y, x, ch) = acc / k;
          }
    }
  }

  if (spec.dropout) {
    for (int r = 0; r < params.dropout_count; ++r) {
      const Rect rect = random_rect(regions, h, w, 0.10, 0.25);
      std::array<double, 3> mean{0.0, 0.0, 0.0};
      int n = 0;
      for (int y = rect.y0; y < rect.y1; ++y)
        for (int x = rect.x0; x < rect.x1; ++x, ++n)
          for (int ch = 0; ch < 3; ++ch) mean[static_cast<std::size_t>(ch)] += out.at(y, x, ch);
      for (auto& m : mean) m /= std::max(1, n);
      for (int y = rect.y0; y < rect.y1; ++y)
        for (int x = rect.x0; x < rect.x1; ++x)
          for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = mean[static_cast<std::size_t>(ch)];
    }
  }

  if (spec.haze) {
    static constexpr std::array<double, 3> kHaze{0.75, 0.78, 0.82};
    const double beta = params.haze_strength;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < 3; ++ch)
          out.at(y, x, ch) = (1.0 - beta) * out.at(y, x, ch) + beta * kHaze[static_cast<std::size_t>(ch)];
  }

  return quantize(out);
}

namespace {

Camera sample_camera(const Scene& scene, Rng& rng, const Eigen::Vector3d& base_eye, double jitter_radians,
                     double jitter_units, int height, int width) {
  const Eigen::Vector3d target(0.0, 0.0, scene.mean_depth());
  constexpr int kMaxTries = 20;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    const Eigen::Vector3d eye =
        base_eye + jitter_units * Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double angle = rng.uniform(0.0, jitter_radians);
    const Eigen::Matrix3d r = axis_angle(axis, angle) * look_at_rotation(eye, target);
    Camera cam = make_camera(width * 1.0, width, height, r, -r * eye);
    if (eye.z() < scene.min_depth() - 0.5) return cam;
  }
  throw std::runtime_error("make_viewset: could not place camera in front of geometry");
}

}  // namespace

ViewSet make_viewset(const Scene& scene, int n_views, int n_refs, const CorruptionSpec& spec, int height, int width,
                     double jitter_radians, double jitter_units, std::uint64_t pose_seed) {
  if (n_views < 1) throw std::invalid_argument("make_viewset: n_views must be >= 1");
  if (n_refs < 0) throw std::invalid_argument("make_viewset: n_refs must be >= 0");

  Rng rng(mix_seed(pose_seed, 0xca3e4a5));
  const Eigen::Vector3d base_eye(rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(-0.3, 0.1));

  ViewSet vs;
  vs.scene_id = scene.seed;
  vs.severity = spec.severity;
  vs.split_id = spec.split_id;
  vs.seed = pose_seed;

  for (int i = 0; i < n_views; ++i) {
    const Camera cam = sample_camera(scene, rng, base_eye, jitter_radians, jitter_units, height, width);
    ViewRecord rec;
    rec.camera = cam;
    rec.clean = render_view(scene, cam, height, width);
    rec.distorted = corrupt(rec.clean, cam, spec);
    vs.views.push_back(std::move(rec));
  }
  for (int i = 0; i < n_refs; ++i) {
    // References sit farther from the degraded cluster but stay clean.
    const Camera cam = sample_camera(scene, rng, base_eye, 3.0 * jitter_radians, 3.0 * jitter_units, height, width);
    ReferenceRecord rec;
    rec.camera = cam;
    rec.clean = render_view(scene, cam, height, width);
    vs.references.push_back(std::move(rec));
  }
  return vs;
}

namespace {

bool point_visible(const Scene& scene, const Layer& on_layer, const Camera& cam, const Eigen::Vector3d& point,
                   Eigen::Vector2d* pixel) {
  double depth = 0.0;
  const auto px = cam.project(point, &depth);
  if (!px) return false;
  const double w = 2.0 * cam.K(0, 2), h = 2.0 * cam.K(1, 2);
  if (px->x() < 0.5 || px->x() > w - 0.5 || px->y() < 0.5 || px->y() > h - 0.5) return false;
  // Occlusion: a nearer layer blocking the ray to the point.
  const Eigen::Vector3d c = cam.center();
  const Eigen::Vector3d dir = point - c;
  for (const Layer& l : scene.layers) {
    if (l.depth >= on_layer.depth - 1e-9) continue;
    const double s = (l.depth - c.z()) / dir.z();
    if (s <= 0.0 || s >= 1.0) continue;
    const double wu = c.x() + s * dir.x(), wv = c.y() + s * dir.y();
    if (std::abs(wu - l.center_u) <= l.half_u && std::abs(wv - l.center_v) <= l.half_v) return false;
  }
  *pixel = *px;
  return true;
}

}  // namespace

std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> ground_truth_correspondences(const Scene& scene,
                                                                                      const Camera& cam_a,
                                                                                      const Camera& cam_b, int count,
                                                                                      std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xc044e5b));
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs;
  const int budget = 400 * count;
  for (int attempt = 0; attempt < budget && static_cast<int>(pairs.size()) < count; ++attempt) {
    const Layer& layer = scene.layers[rng.next_below(scene.layers.size())];
    const Eigen::Vector3d point(layer.center_u + rng.uniform(-1, 1) * layer.half_u,
                                layer.center_v + rng.uniform(-1, 1) * layer.half_v, layer.depth);
    Eigen::Vector2d pa, pb;
    if (point_visible(scene, layer, cam_a, point, &pa) && point_visible(scene, layer, cam_b, point, &pb))
      pairs.emplace_back(pa, pb);
  }
  if (static_cast<int>(pairs.size()) < count)
    throw std::runtime_error("ground_truth_correspondences: only " + std::to_string(pairs.size()) + " of " +
                             std::to_string(count) + " co-visible samples found");
  return pairs;
}

}  // namespace mvbridge
