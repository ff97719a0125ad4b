#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "tdcr/distances.hpp"
#include "tdcr/errors.hpp"
#include "tdcr/robot_model.hpp"

namespace tdcr {

struct PatternSearchOptions {
  double initial_step_fraction = 0.10;  // of each parameter scale
  double min_step_fraction = 0.001;     // stop once the step shrinks below
  int max_evals = 1000;
};

struct PatternSearchResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::quiet_NaN();
  int evals = 0;
};

/// Hooke-Jeeves pattern search: axis-wise exploratory probes, pattern
/// (acceleration) moves after a successful sweep, step halving after a
/// failed one. Probes are clamped to [lower, upper]. Returns the best point
/// evaluated; with max_evals == 0 the start point is returned untouched.
inline PatternSearchResult pattern_search(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& scales,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const PatternSearchOptions& opt = {}) {
  const int dim = static_cast<int>(x0.size());
  if (scales.size() != dim || lower.size() != dim || upper.size() != dim)
    throw InvalidInput("pattern_search: dimension mismatch");

  PatternSearchResult best;
  best.x = x0;
  if (opt.max_evals <= 0) return best;

  auto clamp_vec = [&](Eigen::VectorXd v) {
    for (int i = 0; i < dim; ++i) v(i) = std::clamp(v(i), lower(i), upper(i));
    return v;
  };

  int evals = 0;
  auto budget_left = [&] { return evals < opt.max_evals; };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double f = objective(x);
    if (std::isnan(best.value) || f < best.value) {
      best.value = f;
      best.x = x;
    }
    return f;
  };

  Eigen::VectorXd base = clamp_vec(x0);
  double f_base = eval(base);

  Eigen::VectorXd prev_base = base;
  bool have_direction = false;
  double frac = opt.initial_step_fraction;

  while (frac >= opt.min_step_fraction && budget_left()) {
    // Explore around the pattern point when a move direction exists,
    // otherwise around the current base.
    Eigen::VectorXd center =
        have_direction ? clamp_vec(base + (base - prev_base)) : base;
    double f_center = f_base;
    if (have_direction) {
      f_center = eval(center);
    }

    Eigen::VectorXd y = center;
    double f_y = f_center;
    for (int i = 0; i < dim; ++i) {
      const double step = frac * scales(i);
      if (!budget_left()) break;
      Eigen::VectorXd trial = y;
      trial(i) = std::clamp(y(i) + step, lower(i), upper(i));
      double f_trial = eval(trial);
      if (f_trial < f_y) {
        y = trial;
        f_y = f_trial;
        continue;
      }
      if (!budget_left()) break;
      trial(i) = std::clamp(y(i) - step, lower(i), upper(i));
      f_trial = eval(trial);
      if (f_trial < f_y) {
        y = trial;
        f_y = f_trial;
      }
    }

    if (f_y < f_base) {
      prev_base = base;
      base = y;
      f_base = f_y;
      have_direction = true;
    } else if (have_direction) {
      have_direction = false;  // retreat to plain exploration
    } else {
      frac *= 0.5;
    }
  }
  best.evals = evals;
  return best;
}

/// Calibrates the baseline's curvature gain, tendon radial offset, and
/// helical phase against observed (configuration, cloud) pairs by
/// minimizing the mean Chamfer distance of regenerated clouds.
inline RobotParams calibrate_baseline(
    const RobotParams& p_init,
    const std::vector<std::pair<Config, PointCloud>>& training_pairs,
    int max_evals, const SimOptions& opt = {}) {
  if (training_pairs.empty())
    throw InvalidInput("calibrate_baseline: no training pairs");
  if (max_evals <= 0) return p_init;

  auto params_from = [&](const Eigen::VectorXd& x) {
    RobotParams p = p_init;
    p.curvature_gain = x(0);
    p.tendon_radial_offset = x(1);
    p.helical_phase = x(2);
    return p;
  };
  auto objective = [&](const Eigen::VectorXd& x) {
    const RobotParams p = params_from(x);
    double sum = 0.0;
    for (std::size_t i = 0; i < training_pairs.size(); ++i) {
      const auto& [q, cloud] = training_pairs[i];
      // Fixed per-pair seeds keep the objective consistent across probes.
      const PointCloud pred =
          baseline_cloud(p, q, static_cast<int>(cloud.size()),
                         static_cast<std::uint64_t>(i), opt);
      sum += chamfer_distance(pred, cloud);
    }
    return sum / static_cast<double>(training_pairs.size());
  };

  Eigen::VectorXd x0(3), scales(3), lower(3), upper(3);
  x0 << p_init.curvature_gain, p_init.tendon_radial_offset,
      p_init.helical_phase;
  // Zero-valued parameters (typically the phase) still need a usable step.
  scales << std::max(std::abs(x0(0)), 1.0), std::max(std::abs(x0(1)), 0.01),
      std::max(std::abs(x0(2)), kTwoPi / 2.0);
  lower << 0.05, 1e-3, -kTwoPi;
  upper << 5.0, 0.05, kTwoPi;

  PatternSearchOptions ps;
  ps.max_evals = max_evals;
  const PatternSearchResult res =
      pattern_search(objective, x0, scales, lower, upper, ps);
  return params_from(res.x);
}

}  // namespace tdcr
