#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tdcr/errors.hpp"
#include "tdcr/fps.hpp"
#include "tdcr/geometry.hpp"
#include "tdcr/random.hpp"

namespace tdcr {

constexpr double kTwoPi = 6.283185307179586477;

/// Geometry of the simulated robot: a flexible backbone of length l carrying
/// spacer disks, driven by three straight tendons and one helical tendon.
struct RobotParams {
  double backbone_length = 0.2;        // l, meters
  int tendon_count = 4;                // 3 straight + 1 helical
  double tendon_radial_offset = 0.01;  // r, meters
  std::array<double, 3> straight_tendon_angles = {0.0, kTwoPi / 3.0,
                                                  2.0 * kTwoPi / 3.0};
  double helical_turns = 1.0;  // revolutions over the full length
  double helical_phase = 0.0;  // radians
  int disk_count = 9;
  double disk_diameter = 0.02;
  double disk_spacing = 0.02;
  double disk_thickness = 0.003;
  double backbone_tube_radius = 0.002;
  double q_max = 0.02;          // per-tendon displacement limit, meters
  double curvature_gain = 1.0;  // dimensionless
};

inline void validate(const RobotParams& p) {
  if (!(p.backbone_length > 0.0))
    throw InvalidInput("RobotParams: backbone_length must be positive");
  if (p.tendon_count != 4)
    throw InvalidInput("RobotParams: expected 3 straight tendons + 1 helical");
  if (!(p.tendon_radial_offset > 0.0))
    throw InvalidInput("RobotParams: tendon_radial_offset must be positive");
  if (!(p.q_max > 0.0)) throw InvalidInput("RobotParams: q_max must be positive");
  if (p.disk_count < 1) throw InvalidInput("RobotParams: disk_count must be >= 1");
  if (!(p.disk_diameter > 0.0) || !(p.disk_spacing > 0.0) ||
      !(p.disk_thickness > 0.0) || !(p.backbone_tube_radius > 0.0))
    throw InvalidInput("RobotParams: disk/tube dimensions must be positive");
  if (p.disk_count * p.disk_spacing > p.backbone_length + p.disk_spacing + 1e-12)
    throw InvalidInput("RobotParams: disks do not fit on the backbone");
}

/// Commanded tendon displacements at the base, meters.
struct Config {
  Eigen::VectorXd q;
};

inline Config zero_config(const RobotParams& p) {
  return {Eigen::VectorXd::Zero(p.tendon_count)};
}

inline void validate(const RobotParams& p, const Config& c) {
  if (c.q.size() != p.tendon_count)
    throw InvalidInput("Config: expected " + std::to_string(p.tendon_count) +
                       " tendon displacements, got " +
                       std::to_string(c.q.size()));
  for (int i = 0; i < c.q.size(); ++i) {
    if (!std::isfinite(c.q(i)) || c.q(i) < -1e-12 || c.q(i) > p.q_max + 1e-12)
      throw InvalidInput("Config: tendon " + std::to_string(i) +
                         " displacement out of [0, q_max]");
  }
}

/// Prior and current configuration pair; the learned model's input.
struct HysteresisConfig {
  Config q_prior;
  Config q_current;
};

/// Directional-deadband hysteresis: pulls under-shoot and releases
/// over-shoot by up to `deadband`, blended smoothly over `smoothing_width`.
struct HysteresisParams {
  double deadband = 0.0016;        // meters
  double smoothing_width = 0.0005; // meters
};

inline void validate(const HysteresisParams& h) {
  if (h.deadband < 0.0)
    throw InvalidInput("HysteresisParams: deadband must be >= 0");
  if (!(h.smoothing_width > 0.0))
    throw InvalidInput("HysteresisParams: smoothing_width must be positive");
}

/// Network input layout: prior configuration, then current.
inline Eigen::VectorXd hysteresis_input(const HysteresisConfig& eta) {
  Eigen::VectorXd v(eta.q_prior.q.size() + eta.q_current.q.size());
  v << eta.q_prior.q, eta.q_current.q;
  return v;
}

inline bool is_home_prior(const HysteresisConfig& eta) {
  return eta.q_prior.q.isZero(0.0);
}

/// The tendon displacement the backbone effectively responds to, given
/// where the robot came from. Identity when deadband is zero or the prior
/// equals the current configuration.
inline Config hysteresis_effective_config(const RobotParams& p,
                                          const HysteresisParams& h,
                                          const HysteresisConfig& eta) {
  validate(h);
  validate(p, eta.q_prior);
  validate(p, eta.q_current);
  Config eff;
  eff.q = eta.q_current.q;
  for (int i = 0; i < eff.q.size(); ++i) {
    const double delta = eta.q_current.q(i) - eta.q_prior.q(i);
    const double lag = h.deadband * std::tanh(delta / h.smoothing_width);
    eff.q(i) = std::clamp(eta.q_current.q(i) - lag, 0.0, p.q_max);
  }
  return eff;
}

/// Backbone pose samples at S+1 stations: position, local frame (columns =
/// x/y/z axes, z tangent), and arc length from the base.
struct BackboneStation {
  Point3 position;
  Eigen::Matrix3d frame;
  double arclen;
};

struct BackboneCurve {
  std::vector<BackboneStation> samples;
  const BackboneStation& tip() const { return samples.back(); }
};

/// Piecewise-constant-curvature kinematics. The local curvature vector in
/// the cross-section plane is
///   kappa(s) = gain/(r*l) * [sum_i q_i (cos a_i, sin a_i)
///                            + q_h (cos phi(s), sin phi(s))],
/// phi(s) = helical_phase + 2*pi*turns*s/l, sampled at step midpoints; each
/// step advances the frame by the exponential map of that twist with zero
/// local torsion. The integrator runs two constant-curvature substeps per
/// reported station, which keeps the S=256 tip within a few 1e-7 of the
/// converged curve even at full helical pull. q = 0 gives a straight line
/// along +z exactly.
inline BackboneCurve backbone_from_config(const RobotParams& p,
                                          const Config& config,
                                          int segments = 256) {
  validate(p);
  validate(p, config);
  if (segments < 16)
    throw InvalidInput("backbone_from_config: need at least 16 segments");

  constexpr int kSubsteps = 2;
  const double l = p.backbone_length;
  const double h = l / (static_cast<double>(segments) * kSubsteps);
  const double gain = p.curvature_gain / (p.tendon_radial_offset * l);
  double straight_x = 0.0, straight_y = 0.0;
  for (int i = 0; i < 3; ++i) {
    straight_x += config.q(i) * std::cos(p.straight_tendon_angles[i]);
    straight_y += config.q(i) * std::sin(p.straight_tendon_angles[i]);
  }
  const double q_helical = config.q(3);

  BackboneCurve curve;
  curve.samples.reserve(segments + 1);
  Point3 pos = Point3::Zero();
  Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();
  curve.samples.push_back({pos, frame, 0.0});

  for (int k = 0; k < segments; ++k) {
    for (int sub = 0; sub < kSubsteps; ++sub) {
      const double s_mid = (k * kSubsteps + sub + 0.5) * h;
      const double phi =
          p.helical_phase + kTwoPi * p.helical_turns * s_mid / l;
      const double kx = gain * (straight_x + q_helical * std::cos(phi));
      const double ky = gain * (straight_y + q_helical * std::sin(phi));
      const double kappa = std::sqrt(kx * kx + ky * ky);

      if (kappa < 1e-12) {
        pos += frame.col(2) * h;
        continue;
      }
      const double dx = kx / kappa;
      const double dy = ky / kappa;
      const double angle = kappa * h;
      const Point3 local_disp((1.0 - std::cos(angle)) / kappa * dx,
                              (1.0 - std::cos(angle)) / kappa * dy,
                              std::sin(angle) / kappa);
      pos += frame * local_disp;
      frame =
          frame *
          Eigen::AngleAxisd(angle, Eigen::Vector3d(-dy, dx, 0.0))
              .toRotationMatrix();
    }
    curve.samples.push_back(
        {pos, frame, (k + 1) * (l / static_cast<double>(segments))});
  }
  return curve;
}

/// Pipeline knobs shared by the cloud generators.
struct SimOptions {
  int segments = 256;
  int n_raw = 4096;
};

/// Area-weighted uniform sampling over the robot's visible surface: both
/// faces and the rim of each disk, plus the backbone tube from base to tip.
/// Every point carries the normalized arc length of its generating station;
/// isotropic Gaussian noise of std noise_sigma is added per coordinate.
inline PointCloud surface_cloud(const RobotParams& p,
                                const BackboneCurve& curve, int n_raw,
                                double noise_sigma, std::uint64_t seed) {
  validate(p);
  if (curve.samples.size() < 2)
    throw InvalidInput("surface_cloud: degenerate backbone curve");
  if (n_raw < 64)
    throw InvalidInput("surface_cloud: n_raw must be at least 64");

  const double total_len = curve.samples.back().arclen;
  const double disk_radius = p.disk_diameter / 2.0;
  const double half_thick = p.disk_thickness / 2.0;
  const double face_area = kTwoPi / 2.0 * disk_radius * disk_radius;
  const double rim_area = kTwoPi * disk_radius * p.disk_thickness;
  const double tube_area = kTwoPi * p.backbone_tube_radius * total_len;

  enum class Kind { FaceTop, FaceBottom, Rim, Tube };
  struct Surface {
    Kind kind;
    double station;  // arc length of the generating disk (unused for tube)
    double cum_area;
  };
  std::vector<Surface> surfaces;
  surfaces.reserve(3 * p.disk_count + 1);
  double cum = 0.0;
  for (int k = 1; k <= p.disk_count; ++k) {
    const double s = k * p.disk_spacing;
    cum += face_area;
    surfaces.push_back({Kind::FaceTop, s, cum});
    cum += face_area;
    surfaces.push_back({Kind::FaceBottom, s, cum});
    cum += rim_area;
    surfaces.push_back({Kind::Rim, s, cum});
  }
  cum += tube_area;
  surfaces.push_back({Kind::Tube, 0.0, cum});
  const double total_area = cum;

  const double station_step = total_len / (curve.samples.size() - 1);
  auto station_at = [&](double s) -> const BackboneStation& {
    long idx = std::lround(s / station_step);
    if (idx < 0) idx = 0;
    const long last = static_cast<long>(curve.samples.size()) - 1;
    if (idx > last) idx = last;
    return curve.samples[idx];
  };

  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n_raw);
  cloud.arclen.reserve(n_raw);
  for (int i = 0; i < n_raw; ++i) {
    const double pick = rng.uniform() * total_area;
    std::size_t si = 0;
    while (si + 1 < surfaces.size() && pick >= surfaces[si].cum_area) ++si;
    const Surface& surf = surfaces[si];

    double s_gen = surf.station;
    Point3 local;
    switch (surf.kind) {
      case Kind::FaceTop:
      case Kind::FaceBottom: {
        const double theta = kTwoPi * rng.uniform();
        const double rho = disk_radius * std::sqrt(rng.uniform());
        const double z = surf.kind == Kind::FaceTop ? half_thick : -half_thick;
        local = Point3(rho * std::cos(theta), rho * std::sin(theta), z);
        break;
      }
      case Kind::Rim: {
        const double theta = kTwoPi * rng.uniform();
        const double z = (rng.uniform() - 0.5) * p.disk_thickness;
        local = Point3(disk_radius * std::cos(theta),
                       disk_radius * std::sin(theta), z);
        break;
      }
      case Kind::Tube: {
        s_gen = rng.uniform() * total_len;
        const double theta = kTwoPi * rng.uniform();
        local = Point3(p.backbone_tube_radius * std::cos(theta),
                       p.backbone_tube_radius * std::sin(theta), 0.0);
        break;
      }
    }
    const BackboneStation& st = station_at(s_gen);
    Point3 world = st.position + st.frame * local;
    if (noise_sigma > 0.0) {
      world.x() += noise_sigma * rng.normal();
      world.y() += noise_sigma * rng.normal();
      world.z() += noise_sigma * rng.normal();
    }
    cloud.points.push_back(world);
    cloud.arclen.push_back(s_gen / total_len);
  }
  return cloud;
}

/// Forward-kinematics oracle: hysteresis-adjusted configuration -> dense
/// surface sample -> farthest-point downsample to M points. Bitwise
/// deterministic in (params, eta, M, seed).
inline PointCloud ground_truth_cloud(const RobotParams& p,
                                     const HysteresisParams& h,
                                     const HysteresisConfig& eta, int M,
                                     double noise_sigma, std::uint64_t seed,
                                     const SimOptions& opt = {}) {
  const Config q_eff = hysteresis_effective_config(p, h, eta);
  const BackboneCurve curve = backbone_from_config(p, q_eff, opt.segments);
  const PointCloud raw = surface_cloud(p, curve, opt.n_raw, noise_sigma, seed);
  return fps_downsample(raw, M, seed);
}

/// Exact backbone tip for an executed configuration pair; the reference for
/// tip-separation statistics.
inline Point3 true_tip_position(const RobotParams& p,
                                const HysteresisParams& h,
                                const HysteresisConfig& eta,
                                int segments = 256) {
  const Config q_eff = hysteresis_effective_config(p, h, eta);
  return backbone_from_config(p, q_eff, segments).tip().position;
}

/// Systematically biased stand-in for a physics model: curvature gain and
/// tendon offset off by fixed factors.
inline RobotParams perturbed_baseline_params(const RobotParams& truth,
                                             double gain_scale = 0.85,
                                             double radial_offset_scale = 1.10) {
  RobotParams p = truth;
  p.curvature_gain = truth.curvature_gain * gain_scale;
  p.tendon_radial_offset = truth.tendon_radial_offset * radial_offset_scale;
  return p;
}

/// Hysteresis-free comparison model: the ground-truth pipeline with zero
/// deadband and zero sensor noise under (usually perturbed) parameters.
/// Output is independent of any prior configuration by construction.
inline PointCloud baseline_cloud(const RobotParams& p_perturbed,
                                 const Config& q, int M, std::uint64_t seed,
                                 const SimOptions& opt = {}) {
  HysteresisParams off;
  off.deadband = 0.0;
  const HysteresisConfig eta{q, q};
  return ground_truth_cloud(p_perturbed, off, eta, M, 0.0, seed, opt);
}

/// Calibration fiducials: home tip plus the four base-plate corners.
inline std::vector<Point3> export_fiducials(const RobotParams& p) {
  return {Point3(0.0, 0.0, p.backbone_length), Point3(0.03, 0.03, 0.0),
          Point3(-0.03, 0.03, 0.0), Point3(-0.03, -0.03, 0.0),
          Point3(0.03, -0.03, 0.0)};
}

}  // namespace tdcr
