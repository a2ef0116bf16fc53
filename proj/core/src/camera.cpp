#include "mvbridge/camera.hpp"

#include <cmath>

namespace mvbridge {

std::optional<Eigen::Vector2d> Camera::project(const Eigen::Vector3d& world, double* depth) const {
  const Eigen::Vector3d cam = to_camera(world);
  if (cam.z() <= 1e-9) return std::nullopt;
  if (depth) *depth = cam.z();
  const Eigen::Vector3d px = K * cam;
  return Eigen::Vector2d(px.x() / px.z(), px.y() / px.z());
}

Eigen::Vector3d Camera::pixel_ray(double u, double v) const {
  const Eigen::Vector3d dir_cam = K.inverse() * Eigen::Vector3d(u, v, 1.0);
  return R.transpose() * dir_cam;
}

bool Camera::valid_rotation(double tol) const {
  const Eigen::Matrix3d rtr = R.transpose() * R;
  return (rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < tol && std::abs(R.determinant() - 1.0) < tol;
}

Camera make_camera(double focal_px, int width, int height, const Eigen::Matrix3d& R, const Eigen::Vector3d& t) {
  Camera cam;
  cam.K << focal_px, 0.0, width / 2.0, 0.0, focal_px, height / 2.0, 0.0, 0.0, 1.0;
  cam.R = R;
  cam.t = t;
  return cam;
}

Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d up(0.0, -1.0, 0.0);
  Eigen::Vector3d x = up.cross(z);
  if (x.norm() < 1e-12) x = Eigen::Vector3d(1.0, 0.0, 0.0);
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  if (axis.norm() < 1e-15 || angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d fundamental_from_cameras(const Camera& a, const Camera& b) {
  const Eigen::Matrix3d r_rel = b.R * a.R.transpose();
  const Eigen::Vector3d t_rel = b.t - r_rel * a.t;
  const Eigen::Matrix3d e = cross_matrix(t_rel) * r_rel;  // essential
  return b.K.inverse().transpose() * e * a.K.inverse();
}

}  // namespace mvbridge
