#include <algorithm>
#include <set>

#include "doctest.h"
#include "mvbridge/scene.hpp"
#include "test_support.hpp"

using namespace mvbridge;

namespace {

Scene solid_scene(double value) {
  Scene scene;
  Layer layer;
  layer.depth = 4.0;
  layer.half_u = layer.half_v = 50.0;  // covers every ray
  layer.texture.kind = TextureKind::kSprites;
  layer.texture.sprites.clear();
  layer.texture.color_a = {value, value, value};
  scene.layers.push_back(layer);
  return scene;
}

Camera front_camera(int res, const Eigen::Vector3d& eye = {0, 0, 0}) {
  const Eigen::Matrix3d r = look_at_rotation(eye, {0, 0, 4.0});
  return make_camera(res, res, res, r, -r * eye);
}

}  // namespace

TEST_CASE("generate_scene is deterministic and satisfies structural invariants") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const Scene a = generate_scene(seed);
    const Scene b = generate_scene(seed);
    CHECK(scene_to_json(a) == scene_to_json(b));

    std::set<double> depths;
    for (const Layer& l : a.layers) {
      CHECK(l.depth > 0.0);
      depths.insert(l.depth);
    }
    CHECK(depths.size() >= 2);
  }
}

TEST_CASE("100 seeds give at least 90 distinct texture parameterizations") {
  std::set<std::string> serialized;
  for (std::uint64_t seed = 0; seed < 100; ++seed) serialized.insert(scene_to_json(generate_scene(seed)));
  CHECK(serialized.size() >= 90);
}

TEST_CASE("a single full-frame solid layer renders to a constant image") {
  const Image img = render_view(solid_scene(0.4), front_camera(32), 32, 32);
  const double expected = quantize_unit(0.4);
  for (double v : img.data) CHECK(v == expected);
}

TEST_CASE("rendering is deterministic") {
  const Scene scene = generate_scene(5);
  const Camera cam = front_camera(48);
  CHECK(testsupport::bit_equal(render_view(scene, cam, 48, 48), render_view(scene, cam, 48, 48)));
}

TEST_CASE("parallax: near-layer points shift more than far-layer points under camera translation") {
  // analytic corner projection through K[R|t], no rendering involved
  Scene scene;
  for (double depth : {6.0, 2.5}) {
    Layer l;
    l.depth = depth;
    l.half_u = l.half_v = depth;
    scene.layers.push_back(l);
  }
  const Camera cam_a = front_camera(64, {0, 0, 0});
  const Camera cam_b = front_camera(64, {0.4, 0, 0});

  const Eigen::Vector3d far_point(0.5, 0.3, 6.0);
  const Eigen::Vector3d near_point(0.5, 0.3, 2.5);
  const double far_shift = (*cam_a.project(far_point) - *cam_b.project(far_point)).norm();
  const double near_shift = (*cam_a.project(near_point) - *cam_b.project(near_point)).norm();
  CHECK(near_shift > far_shift + 1.0);
}

TEST_CASE("camera behind a layer is rejected") {
  const Scene scene = solid_scene(0.5);
  CHECK_THROWS_AS(render_view(scene, front_camera(32, {0, 0, 4.5}), 32, 32), std::invalid_argument);
}

TEST_CASE("severity 0 corruption is the identity, bit-exactly") {
  const Image img = testsupport::noise_image(32, 32, 9);
  CorruptionSpec spec;
  spec.severity = 0;
  spec.seed = 4;
  CHECK(testsupport::bit_equal(corrupt(img, front_camera(32), spec), img));
}

TEST_CASE("corruption is deterministic in (image, camera, spec)") {
  const Image img = testsupport::noise_image(32, 32, 10);
  CorruptionSpec spec;
  spec.severity = 4;
  spec.seed = 11;
  spec.split_id = 2;
  const Camera cam = front_camera(32);
  CHECK(testsupport::bit_equal(corrupt(img, cam, spec), corrupt(img, cam, spec)));
}

TEST_CASE("expected corruption magnitude is non-decreasing in severity") {
  const Camera cam = front_camera(32);
  double prev = -1.0;
  for (int severity = 0; severity <= kMaxSeverity; ++severity) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Scene scene = generate_scene(seed + 200);
      const Image clean = render_view(scene, cam, 32, 32);
      CorruptionSpec spec;
      spec.severity = severity;
      spec.seed = seed;
      mean += mean_abs_diff(corrupt(clean, cam, spec), clean);
    }
    mean /= 20.0;
    CHECK(mean >= prev);
    prev = mean;
  }
}

TEST_CASE("corrupt rejects out-of-range severities") {
  CorruptionSpec spec;
  spec.severity = 6;
  CHECK_THROWS_AS(corrupt(Image(8, 8), front_camera(8), spec), std::invalid_argument);
}

TEST_CASE("floater anchors are shared within a split and differ across splits") {
  CorruptionSpec spec;
  spec.severity = 3;
  spec.seed = 21;
  spec.split_id = 0;
  const auto a1 = floater_anchors(spec);
  const auto a2 = floater_anchors(spec);
  REQUIRE(a1.size() == a2.size());
  REQUIRE(!a1.empty());
  for (std::size_t i = 0; i < a1.size(); ++i) CHECK(a1[i] == a2[i]);

  spec.split_id = 1;
  const auto b = floater_anchors(spec);
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(a1.size(), b.size()); ++i) any_diff = any_diff || a1[i] != b[i];
  CHECK(any_diff);
}

TEST_CASE("rendered floater blobs sit at the anchors' projections in every view") {
  // Floaters-only corruption; the blob centroid measured from the image
  // must land on the analytic projection of the shared 3D anchor.
  const Scene scene = generate_scene(31);
  CorruptionSpec spec;
  spec.severity = 1;  // two well-separated blobs
  spec.seed = 1234;
  spec.split_id = 0;
  spec.local_blur = spec.dropout = spec.haze = false;

  const ViewSet vs = make_viewset(scene, 3, 0, CorruptionSpec{}, 64, 64, kDefaultJitterRadians, kDefaultJitterUnits, 77);
  const auto anchors = floater_anchors(spec);
  REQUIRE(anchors.size() == 2);

  int checked = 0;
  for (const ViewRecord& view : vs.views) {
    const Image corrupted = corrupt(view.clean, view.camera, spec);
    for (const Eigen::Vector3d& anchor : anchors) {
      const auto px = view.camera.project(anchor);
      if (!px || px->x() < 10 || px->x() > 54 || px->y() < 10 || px->y() > 54) continue;
      double wsum = 0.0, cx = 0.0, cy = 0.0;
      for (int y = static_cast<int>(px->y()) - 7; y <= static_cast<int>(px->y()) + 7; ++y)
        for (int x = static_cast<int>(px->x()) - 7; x <= static_cast<int>(px->x()) + 7; ++x) {
          double w = 0.0;
          for (int c = 0; c < 3; ++c) w += std::abs(corrupted.at(y, x, c) - view.clean.at(y, x, c));
          wsum += w;
          cx += w * (x + 0.5);
          cy += w * (y + 0.5);
        }
      REQUIRE(wsum > 0.0);
      const Eigen::Vector2d centroid(cx / wsum, cy / wsum);
      CHECK((centroid - *px).norm() < 0.5);
      checked += 1;
    }
  }
  CHECK(checked >= 3);  // the anchors are visible in most of the overlapping views
}

TEST_CASE("make_viewset: n_refs=0 leaves references empty") {
  const Scene scene = generate_scene(1);
  CorruptionSpec spec;
  spec.severity = 1;
  const ViewSet vs = make_viewset(scene, 2, 0, spec, 32, 32, kDefaultJitterRadians, kDefaultJitterUnits, 3);
  CHECK(vs.references.empty());
  CHECK(vs.views.size() == 2);
}

TEST_CASE("make_viewset: zero jitter degenerates to identical cameras and clean images") {
  const Scene scene = generate_scene(2);
  CorruptionSpec spec;
  spec.severity = 0;
  const ViewSet vs = make_viewset(scene, 2, 0, spec, 32, 32, 0.0, 0.0, 5);
  CHECK((vs.views[0].camera.R - vs.views[1].camera.R).norm() == 0.0);
  CHECK((vs.views[0].camera.t - vs.views[1].camera.t).norm() == 0.0);
  CHECK(testsupport::bit_equal(vs.views[0].clean, vs.views[1].clean));
}

TEST_CASE("default jitter keeps pairwise frustum overlap of scene corners above 0.6") {
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene scene = generate_scene(seed + 400);
    CorruptionSpec spec;
    spec.severity = 1;
    spec.seed = seed;
    const ViewSet vs = make_viewset(scene, 3, 0, spec, 64, 64, kDefaultJitterRadians, kDefaultJitterUnits, seed);

    std::vector<Eigen::Vector3d> corners;
    for (const Layer& l : scene.layers)
      for (int su : {-1, 1})
        for (int sv : {-1, 1})
          corners.emplace_back(l.center_u + su * l.half_u, l.center_v + sv * l.half_v, l.depth);

    const auto visible = [&](const Camera& cam, const Eigen::Vector3d& p) {
      const auto px = cam.project(p);
      return px && px->x() >= 0 && px->x() <= 64 && px->y() >= 0 && px->y() <= 64;
    };
    for (std::size_t i = 0; i < vs.views.size(); ++i)
      for (std::size_t j = i + 1; j < vs.views.size(); ++j) {
        int both = 0;
        for (const auto& c : corners)
          if (visible(vs.views[i].camera, c) && visible(vs.views[j].camera, c)) both += 1;
        worst = std::min(worst, static_cast<double>(both) / static_cast<double>(corners.size()));
      }
  }
  CHECK(worst >= 0.6);
}

TEST_CASE("ground-truth correspondences: identical cameras give identical pixel pairs") {
  const Scene scene = generate_scene(3);
  const Camera cam = front_camera(64);
  const auto pairs = ground_truth_correspondences(scene, cam, cam, 20, 9);
  for (const auto& [a, b] : pairs) CHECK((a - b).norm() == 0.0);
}

TEST_CASE("ground-truth correspondences satisfy the analytic epipolar constraint") {
  const Scene scene = generate_scene(4);
  const Camera cam_a = front_camera(64, {0, 0, 0});
  const Camera cam_b = front_camera(64, {0.3, 0.1, -0.1});
  const Eigen::Matrix3d f = fundamental_from_cameras(cam_a, cam_b) /
                            fundamental_from_cameras(cam_a, cam_b).norm();
  const auto pairs = ground_truth_correspondences(scene, cam_a, cam_b, 50, 10);
  for (const auto& [a, b] : pairs) {
    const Eigen::Vector3d xa(a.x(), a.y(), 1.0);
    const Eigen::Vector3d xb(b.x(), b.y(), 1.0);
    const double residual = std::abs(xb.dot(f * xa)) / (xa.norm() * xb.norm());
    CHECK(residual < 1e-9);
  }
}

TEST_CASE("pure rotation relates correspondences by the infinite homography") {
  const Scene scene = generate_scene(6);
  const Eigen::Vector3d eye(0, 0, 0);
  const Camera cam_a = front_camera(64, eye);
  Camera cam_b = cam_a;
  const Eigen::Matrix3d r_extra = axis_angle({0, 1, 0}, 0.03);
  cam_b.R = r_extra * cam_a.R;
  cam_b.t = -cam_b.R * eye;

  const Eigen::Matrix3d h = cam_b.K * (cam_b.R * cam_a.R.transpose()) * cam_a.K.inverse();
  const auto pairs = ground_truth_correspondences(scene, cam_a, cam_b, 30, 11);
  for (const auto& [a, b] : pairs) {
    const Eigen::Vector3d mapped = h * Eigen::Vector3d(a.x(), a.y(), 1.0);
    const Eigen::Vector2d predicted(mapped.x() / mapped.z(), mapped.y() / mapped.z());
    CHECK((predicted - b).norm() < 1e-9);
  }
}

TEST_CASE("sparsity-to-severity table is monotone") {
  CHECK(severity_for_sparsity(6) == 5);
  CHECK(severity_for_sparsity(8) == 4);
  CHECK(severity_for_sparsity(10) == 3);
  CHECK(severity_for_sparsity(12) == 2);
  CHECK(severity_for_sparsity(16) == 1);
  CHECK(severity_for_sparsity(32) == 1);
}
