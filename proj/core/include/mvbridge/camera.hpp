#pragma once

#include <Eigen/Dense>

#include <optional>

namespace mvbridge {

// Pinhole camera. World-to-camera convention: x_cam = R * x_world + t.
struct Camera {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();   // upper-triangular intrinsics
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();   // orthonormal, det +1
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const { return R * world + t; }
  Eigen::Vector3d center() const { return -R.transpose() * t; }

  // Pixel coordinates and camera-space depth; nullopt when behind the camera.
  std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& world, double* depth = nullptr) const;

  // Unit-less ray direction in world coordinates through pixel center (u,v).
  Eigen::Vector3d pixel_ray(double u, double v) const;

  bool valid_rotation(double tol = 1e-10) const;
};

Camera make_camera(double focal_px, int width, int height, const Eigen::Matrix3d& R, const Eigen::Vector3d& t);

// Rotation with camera z-axis toward `target`, up approximately -y.
Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

// Axis-angle rotation; used for pose jitter.
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle);

// F = K_b^-T [t_rel]x R_rel K_a^-1 with (R_rel, t_rel) the a->b transform.
// Correspondences satisfy x_b^T F x_a = 0 in homogeneous pixel coordinates.
Eigen::Matrix3d fundamental_from_cameras(const Camera& a, const Camera& b);

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v);

}  // namespace mvbridge
