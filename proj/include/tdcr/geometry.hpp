#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <utility>
#include <vector>

#include "tdcr/errors.hpp"

namespace tdcr {

/// 3D point, meters.
using Point3 = Eigen::Vector3d;

/// Ordered point container. Index order is storage order only; the distance
/// functions attach no meaning to it. `arclen` optionally labels each point
/// with the normalized arc length in [0, 1] of its generating backbone
/// station (present on simulator ground truth, absent otherwise).
struct PointCloud {
  std::vector<Point3> points;
  std::vector<double> arclen;  // empty, or one entry per point

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_arclen() const {
    return !points.empty() && arclen.size() == points.size();
  }
};

inline bool all_finite(const PointCloud& c) {
  for (const auto& p : c.points)
    if (!p.allFinite()) return false;
  return true;
}

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  Point3 operator*(const Point3& p) const { return rotation * p + translation; }

  bool is_rigid(double tol = 1e-9) const {
    Eigen::Matrix3d err =
        rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// Maps every point through t; arclen labels ride along unchanged.
inline PointCloud apply_transform(const RigidTransform& t,
                                  const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points)
    out.points.push_back(t.rotation * p + t.translation);
  out.arclen = cloud.arclen;
  return out;
}

/// a's points first, then b's. The result keeps arclen labels only when
/// every nonempty input carries them.
inline PointCloud concat(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.points.reserve(a.size() + b.size());
  out.points.insert(out.points.end(), a.points.begin(), a.points.end());
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  const bool a_labeled = a.arclen.size() == a.points.size();
  const bool b_labeled = b.arclen.size() == b.points.size();
  if (a_labeled && b_labeled && !out.points.empty()) {
    out.arclen.reserve(out.points.size());
    out.arclen.insert(out.arclen.end(), a.arclen.begin(), a.arclen.end());
    out.arclen.insert(out.arclen.end(), b.arclen.begin(), b.arclen.end());
  }
  return out;
}

}  // namespace tdcr
