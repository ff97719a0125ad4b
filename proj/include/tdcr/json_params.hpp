#pragma once

#include <json.hpp>

#include "tdcr/robot_model.hpp"

namespace tdcr {

inline void to_json(nlohmann::json& j, const RobotParams& p) {
  j = nlohmann::json{
      {"backbone_length", p.backbone_length},
      {"tendon_count", p.tendon_count},
      {"tendon_radial_offset", p.tendon_radial_offset},
      {"straight_tendon_angles",
       {p.straight_tendon_angles[0], p.straight_tendon_angles[1],
        p.straight_tendon_angles[2]}},
      {"helical_turns", p.helical_turns},
      {"helical_phase", p.helical_phase},
      {"disk_count", p.disk_count},
      {"disk_diameter", p.disk_diameter},
      {"disk_spacing", p.disk_spacing},
      {"disk_thickness", p.disk_thickness},
      {"backbone_tube_radius", p.backbone_tube_radius},
      {"q_max", p.q_max},
      {"curvature_gain", p.curvature_gain}};
}

inline void from_json(const nlohmann::json& j, RobotParams& p) {
  p = RobotParams{};
  if (j.contains("backbone_length")) j.at("backbone_length").get_to(p.backbone_length);
  if (j.contains("tendon_count")) j.at("tendon_count").get_to(p.tendon_count);
  if (j.contains("tendon_radial_offset"))
    j.at("tendon_radial_offset").get_to(p.tendon_radial_offset);
  if (j.contains("straight_tendon_angles")) {
    const auto& a = j.at("straight_tendon_angles");
    for (int i = 0; i < 3; ++i) p.straight_tendon_angles[i] = a.at(i).get<double>();
  }
  if (j.contains("helical_turns")) j.at("helical_turns").get_to(p.helical_turns);
  if (j.contains("helical_phase")) j.at("helical_phase").get_to(p.helical_phase);
  if (j.contains("disk_count")) j.at("disk_count").get_to(p.disk_count);
  if (j.contains("disk_diameter")) j.at("disk_diameter").get_to(p.disk_diameter);
  if (j.contains("disk_spacing")) j.at("disk_spacing").get_to(p.disk_spacing);
  if (j.contains("disk_thickness")) j.at("disk_thickness").get_to(p.disk_thickness);
  if (j.contains("backbone_tube_radius"))
    j.at("backbone_tube_radius").get_to(p.backbone_tube_radius);
  if (j.contains("q_max")) j.at("q_max").get_to(p.q_max);
  if (j.contains("curvature_gain")) j.at("curvature_gain").get_to(p.curvature_gain);
}

inline void to_json(nlohmann::json& j, const HysteresisParams& h) {
  j = nlohmann::json{{"deadband", h.deadband},
                     {"smoothing_width", h.smoothing_width}};
}

inline void from_json(const nlohmann::json& j, HysteresisParams& h) {
  h = HysteresisParams{};
  if (j.contains("deadband")) j.at("deadband").get_to(h.deadband);
  if (j.contains("smoothing_width"))
    j.at("smoothing_width").get_to(h.smoothing_width);
}

}  // namespace tdcr
