#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdcr/errors.hpp"
#include "tdcr/geometry.hpp"

namespace tdcr {

/// Paired source/target points observed in two frames.
struct CorrespondenceSet {
  std::vector<Point3> source;
  std::vector<Point3> target;
};

/// Least-squares rigid transform minimizing sum ||R s_i + t - t_i||^2.
/// Cross-covariance SVD with reflection correction, so the result is always
/// a proper rotation even when the unconstrained optimum would be a mirror.
inline RigidTransform estimate_rigid_transform(const CorrespondenceSet& c) {
  const std::size_t n = c.source.size();
  if (n != c.target.size())
    throw InvalidInput("estimate_rigid_transform: source/target size mismatch");
  if (n < 3)
    throw DegenerateInput(
        "estimate_rigid_transform: need at least 3 correspondences");

  Point3 src_centroid = Point3::Zero();
  Point3 tgt_centroid = Point3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    src_centroid += c.source[i];
    tgt_centroid += c.target[i];
  }
  src_centroid /= static_cast<double>(n);
  tgt_centroid /= static_cast<double>(n);

  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 s = c.source[i] - src_centroid;
    src.col(i) = s;
    cross += s * (c.target[i] - tgt_centroid).transpose();
  }

  // Collinear sources leave the rotation about their axis unobservable.
  Eigen::JacobiSVD<Eigen::Matrix3Xd> src_svd(src);
  const auto& sv = src_svd.singularValues();
  if (sv(1) <= 1e-9 * sv(0))
    throw DegenerateInput("estimate_rigid_transform: collinear source points");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
  correction(2, 2) =
      (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0
                                                                    : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * correction * svd.matrixU().transpose();
  t.translation = tgt_centroid - t.rotation * src_centroid;
  return t;
}

/// Composition: applying the result equals applying inner, then outer.
inline RigidTransform compose(const RigidTransform& outer,
                              const RigidTransform& inner) {
  RigidTransform t;
  t.rotation = outer.rotation * inner.rotation;
  t.translation = outer.rotation * inner.translation + outer.translation;
  return t;
}

/// Hemispherical workspace gate: a ball of `radius` around `center`, cut by
/// the base plane with a small tolerance band below it so base-adjacent
/// robot points survive.
struct WorkspaceFilter {
  Point3 center = Point3::Zero();
  double radius = 0.22;
  Eigen::Vector3d halfspace_normal = Eigen::Vector3d::UnitZ();
  double plane_tolerance = 0.005;  // meters below the base plane
};

/// Keeps exactly the points inside the workspace hemisphere, preserving
/// input order. Removing everything signals a registration failure.
inline PointCloud segment_workspace(const PointCloud& cloud,
                                    const WorkspaceFilter& f) {
  if (!(f.radius > 0.0))
    throw InvalidInput("segment_workspace: radius must be positive");
  if (std::abs(f.halfspace_normal.norm() - 1.0) > 1e-12)
    throw InvalidInput("segment_workspace: halfspace_normal must be unit");
  PointCloud out;
  const bool labeled = cloud.has_arclen();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 r = cloud.points[i] - f.center;
    if (r.norm() <= f.radius &&
        r.dot(f.halfspace_normal) >= -f.plane_tolerance) {
      out.points.push_back(cloud.points[i]);
      if (labeled) out.arclen.push_back(cloud.arclen[i]);
    }
  }
  if (out.empty())
    throw EmptyResult("segment_workspace: no points inside the workspace");
  return out;
}

/// Aligns both camera clouds into the base frame, segments each, and
/// concatenates the survivors (first camera first).
inline PointCloud merge_views(const PointCloud& cam1, const RigidTransform& t1,
                              const PointCloud& cam2, const RigidTransform& t2,
                              const WorkspaceFilter& f) {
  return concat(segment_workspace(apply_transform(t1, cam1), f),
                segment_workspace(apply_transform(t2, cam2), f));
}

// --- scene-file serialization -----------------------------------------
// Transforms travel as 12 numbers: row-major rotation, then translation.

inline nlohmann::json transform_to_json(const RigidTransform& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(t.rotation(r, c));
  for (int k = 0; k < 3; ++k) arr.push_back(t.translation(k));
  return arr;
}

inline RigidTransform transform_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != 12)
    throw InvalidInput("transform_from_json: expected 12 numbers");
  RigidTransform t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      t.rotation(r, c) = arr[3 * r + c].get<double>();
  for (int k = 0; k < 3; ++k) t.translation(k) = arr[9 + k].get<double>();
  return t;
}

/// Calibration scene: fiducial points plus named camera transforms.
struct Scene {
  std::vector<Point3> fiducials;
  std::map<std::string, RigidTransform> transforms;
};

inline void write_scene(const std::string& path, const Scene& scene) {
  nlohmann::json j;
  j["fiducials"] = nlohmann::json::array();
  for (const auto& p : scene.fiducials)
    j["fiducials"].push_back({p.x(), p.y(), p.z()});
  j["transforms"] = nlohmann::json::object();
  for (const auto& [name, t] : scene.transforms)
    j["transforms"][name] = transform_to_json(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path, "write failure");
}

inline Scene read_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("JSON parse error: ") + e.what());
  }
  Scene scene;
  for (const auto& p : j.at("fiducials"))
    scene.fiducials.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                 p.at(2).get<double>());
  for (const auto& [name, arr] : j.at("transforms").items())
    scene.transforms[name] = transform_from_json(arr);
  return scene;
}

}  // namespace tdcr
