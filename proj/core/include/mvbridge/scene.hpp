#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mvbridge/camera.hpp"
#include "mvbridge/image.hpp"

namespace mvbridge {

// Procedural stand-in for degraded multi-view captures: layered planar
// scenes rendered with genuine parallax, plus structured view-dependent
// corruptions that mimic sparse-reconstruction failure modes (floaters,
// local blur, dropouts, haze).

enum class TextureKind { kChecker, kNoise, kSprites };

struct Sprite {
  double u = 0.0, v = 0.0, radius = 0.1;
  std::array<double, 3> color{0.5, 0.5, 0.5};
  bool square = false;
};

struct TextureSpec {
  TextureKind kind = TextureKind::kChecker;
  double scale = 0.5;
  double phase_u = 0.0, phase_v = 0.0;
  std::array<double, 3> color_a{0.2, 0.2, 0.2};
  std::array<double, 3> color_b{0.8, 0.8, 0.8};
  int octaves = 3;
  std::uint64_t noise_seed = 0;
  std::vector<Sprite> sprites;
};

// Fronto-parallel textured rectangle at world plane z = depth.
struct Layer {
  double depth = 3.0;
  double center_u = 0.0, center_v = 0.0;
  double half_u = 1.0, half_v = 1.0;
  TextureSpec texture;
};

struct Scene {
  std::vector<Layer> layers;  // at least two distinct depths
  std::uint64_t seed = 0;

  double min_depth() const;
  double mean_depth() const;
};

struct CorruptionSpec {
  int severity = 0;  // 0 (identity) .. 5 (worst)
  int split_id = 0;
  std::uint64_t seed = 0;
  bool floaters = true;
  bool local_blur = true;
  bool dropout = true;
  bool haze = true;
};

inline constexpr int kMaxSeverity = 5;

// Paper-style sparsity (number of training views) to severity grade:
// 6->5, 8->4, 10->3, 12->2, 16->1, 32->1.
int severity_for_sparsity(int training_views);

struct ViewRecord {
  Image clean;
  Image distorted;
  Camera camera;
};

struct ReferenceRecord {
  Image clean;
  Camera camera;
};

struct ViewSet {
  std::vector<ViewRecord> views;
  std::vector<ReferenceRecord> references;
  std::uint64_t scene_id = 0;
  int severity = 0;
  int split_id = 0;
  std::uint64_t seed = 0;
};

Scene generate_scene(std::uint64_t seed);
std::string scene_to_json(const Scene& scene);

std::array<double, 3> texture_color(const TextureSpec& spec, double u, double v);

// Painter's-algorithm render, back to front; output on the 8-bit unit grid.
// Throws if the camera is not strictly in front of every layer.
Image render_view(const Scene& scene, const Camera& camera, int height, int width);

// 3D floater anchors for a (seed, split) pair; shared by every view of the
// split so the same floater reprojects consistently.
std::vector<Eigen::Vector3d> floater_anchors(const CorruptionSpec& spec);

Image corrupt(const Image& image, const Camera& camera, const CorruptionSpec& spec);

inline constexpr double kDefaultJitterRadians = 0.035;
inline constexpr double kDefaultJitterUnits = 0.12;

// n_views corrupted views with strongly overlapping poses near a base pose,
// plus n_refs clean reference views placed farther out.
ViewSet make_viewset(const Scene& scene, int n_views, int n_refs, const CorruptionSpec& spec, int height, int width,
                     double jitter_radians, double jitter_units, std::uint64_t pose_seed);

// Pixel pairs from 3D points on layer surfaces co-visible in both views;
// exact epipolar-constraint witnesses for the metric tests. Image bounds are
// inferred from the principal point (cx = W/2, cy = H/2).
std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> ground_truth_correspondences(const Scene& scene,
                                                                                      const Camera& cam_a,
                                                                                      const Camera& cam_b, int count,
                                                                                      std::uint64_t seed);

}  // namespace mvbridge
