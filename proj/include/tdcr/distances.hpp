#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tdcr/assignment.hpp"
#include "tdcr/errors.hpp"
#include "tdcr/geometry.hpp"

namespace tdcr {

/// Bijection realizing a transport cost between equal-size clouds.
/// pairing[i] is the index in the second cloud matched to point i of the
/// first; cost is the summed Euclidean pair distance in meters.
struct TransportPlan {
  std::vector<int> pairing;
  double cost = 0.0;
  bool converged = true;  // false when an iterative solver hit its cap
};

namespace detail {

inline Eigen::MatrixXd pair_distance_matrix(const PointCloud& a,
                                            const PointCloud& b) {
  Eigen::MatrixXd d(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      d(i, j) = (a.points[i] - b.points[j]).norm();
  return d;
}

inline double plan_cost(const PointCloud& a, const PointCloud& b,
                        const std::vector<int>& pairing) {
  double cost = 0.0;
  for (std::size_t i = 0; i < pairing.size(); ++i)
    cost += (a.points[i] - b.points[pairing[i]]).norm();
  return cost;
}

}  // namespace detail

namespace detail {

inline double directed_chamfer(const PointCloud& from, const PointCloud& to) {
  double total = 0.0;
  for (const auto& x : from.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : to.points) {
      const double d2 = (x - y).squaredNorm();
      if (d2 < best) best = d2;
    }
    total += best;
  }
  return total;
}

}  // namespace detail

/// Sum over both clouds of the squared distance to the nearest neighbor in
/// the other cloud. Units m^2; sizes may differ. The two directed sums are
/// accumulated separately, which makes the result bitwise symmetric.
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty())
    throw InvalidInput("chamfer_distance: empty cloud");
  return detail::directed_chamfer(a, b) + detail::directed_chamfer(b, a);
}

/// Exact Earth Mover's Distance: minimum over bijections of the summed
/// Euclidean pair distance (not squared), solved as a linear assignment.
/// `cap` bounds the solve size; larger instances belong to emd_approx.
inline std::pair<double, TransportPlan> emd_exact(const PointCloud& a,
                                                  const PointCloud& b,
                                                  int cap = 256) {
  if (a.empty() || b.empty()) throw InvalidInput("emd_exact: empty cloud");
  if (a.size() != b.size())
    throw InvalidInput("emd_exact: size mismatch (" +
                       std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  if (static_cast<int>(a.size()) > cap)
    throw CapacityError("emd_exact: " + std::to_string(a.size()) +
                        " points exceeds the exact-solver cap of " +
                        std::to_string(cap) + "; use emd_approx");
  const AssignmentResult r =
      solve_assignment(detail::pair_distance_matrix(a, b));
  TransportPlan plan;
  plan.pairing = r.col_of_row;
  plan.cost = r.cost;
  return {r.cost, plan};
}

/// Mean of all cross-pair Euclidean distances; the reference scale for the
/// entropic regularizer.
inline double mean_pair_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty())
    throw InvalidInput("mean_pair_distance: empty cloud");
  double sum = 0.0;
  for (const auto& x : a.points)
    for (const auto& y : b.points) sum += (x - y).norm();
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

namespace detail {

/// Entropic-regularized transport via log-domain alternating scaling,
/// rounded to a bijection by row-wise argmax over the soft plan with
/// conflicted rows re-assigned to their best remaining column.
inline std::pair<double, TransportPlan> emd_approx_impl(
    const PointCloud& a, const PointCloud& b, const Eigen::MatrixXd& dist,
    double reg, int iters) {
  const int n = static_cast<int>(a.size());
  const double log_marginal = -std::log(static_cast<double>(n));

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  auto lse = [](const Eigen::ArrayXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v - m).exp().sum());
  };

  bool converged = false;
  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < n; ++i) {
      const Eigen::ArrayXd row = (g.array() - dist.row(i).transpose().array()) / reg;
      f(i) = reg * (log_marginal - lse(row));
    }
    for (int j = 0; j < n; ++j) {
      const Eigen::ArrayXd col = (f.array() - dist.col(j).array()) / reg;
      g(j) = reg * (log_marginal - lse(col));
    }
    // Column marginals are exact after the g update; track the row error.
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::ArrayXd row =
          (f(i) + g.array() - dist.row(i).transpose().array()) / reg;
      err += std::abs(row.exp().sum() - 1.0 / n);
    }
    if (err < 1e-9) {
      converged = true;
      break;
    }
  }

  // Greedy rounding on the soft-plan logits.
  std::vector<char> taken(n, 0);
  TransportPlan plan;
  plan.pairing.assign(n, -1);
  plan.converged = converged;
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double logit = (f(i) + g(j) - dist(i, j)) / reg;
      if (logit > best_logit) {
        best_logit = logit;
        best = j;
      }
    }
    taken[best] = 1;
    plan.pairing[i] = best;
  }
  plan.cost = plan_cost(a, b, plan.pairing);
  return {plan.cost, plan};
}

}  // namespace detail

/// Approximate EMD for equal-size clouds. The reported cost is evaluated on
/// the rounded bijection, so it upper-bounds emd_exact.
inline std::pair<double, TransportPlan> emd_approx(const PointCloud& a,
                                                   const PointCloud& b,
                                                   double reg,
                                                   int iters = 200) {
  if (a.empty() || b.empty()) throw InvalidInput("emd_approx: empty cloud");
  if (a.size() != b.size())
    throw InvalidInput("emd_approx: size mismatch (" +
                       std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  if (!(reg > 0.0)) throw InvalidInput("emd_approx: reg must be positive");
  return detail::emd_approx_impl(a, b, detail::pair_distance_matrix(a, b),
                                 reg, iters);
}

/// Solver policy for the EMD term of the blended loss.
struct LossConfig {
  double lambda = 1.0;
  int emd_exact_cap = 256;        // above this the EMD term uses emd_approx
  double approx_reg_scale = 0.01; // reg = scale * mean cross-pair distance
  int approx_iters = 200;
};

/// EMD with the solver picked by cloud size against cfg.emd_exact_cap.
inline std::pair<double, TransportPlan> emd_for_loss(const PointCloud& a,
                                                     const PointCloud& b,
                                                     const LossConfig& cfg) {
  if (static_cast<int>(a.size()) <= cfg.emd_exact_cap)
    return emd_exact(a, b, cfg.emd_exact_cap);
  const Eigen::MatrixXd dist = detail::pair_distance_matrix(a, b);
  const double reg =
      std::max(cfg.approx_reg_scale * dist.mean(), 1e-12);
  return detail::emd_approx_impl(a, b, dist, reg, cfg.approx_iters);
}

/// Blended training loss: Chamfer plus lambda times the EMD cost.
inline double loss_tendon(const PointCloud& pred, const PointCloud& truth,
                          const LossConfig& cfg) {
  const double chamfer = chamfer_distance(pred, truth);
  if (cfg.lambda == 0.0) return chamfer;
  if (pred.size() != truth.size())
    throw InvalidInput("loss_tendon: EMD term requires equal sizes");
  return chamfer + cfg.lambda * emd_for_loss(pred, truth, cfg).first;
}

inline double loss_tendon(const PointCloud& pred, const PointCloud& truth,
                          double lambda) {
  LossConfig cfg;
  cfg.lambda = lambda;
  return loss_tendon(pred, truth, cfg);
}

/// Loss value plus its gradient with respect to every predicted point.
struct LossGradient {
  double loss = 0.0;
  double chamfer = 0.0;
  double emd = 0.0;
  bool emd_converged = true;
  std::vector<Point3> grad;  // d(loss)/d(pred point)
};

/// Subgradient of loss_tendon with the Chamfer nearest-neighbor pairings
/// and the EMD transport plan held fixed at their current values.
inline LossGradient loss_tendon_gradient(const PointCloud& pred,
                                         const PointCloud& truth,
                                         const LossConfig& cfg) {
  if (pred.empty() || truth.empty())
    throw InvalidInput("loss_tendon_gradient: empty cloud");
  LossGradient out;
  out.grad.assign(pred.size(), Point3::Zero());

  // Forward Chamfer: each predicted point pulls toward its nearest truth
  // point. Ties resolve to the lowest index.
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double d2 = (pred.points[i] - truth.points[j]).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    out.chamfer += best;
    out.grad[i] += 2.0 * (pred.points[i] - truth.points[best_j]);
  }
  // Reverse Chamfer: predicted points that are someone's nearest neighbor
  // are pulled toward that truth point.
  for (std::size_t j = 0; j < truth.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d2 = (pred.points[i] - truth.points[j]).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_i = i;
      }
    }
    out.chamfer += best;
    out.grad[best_i] += 2.0 * (pred.points[best_i] - truth.points[j]);
  }

  out.loss = out.chamfer;
  if (cfg.lambda != 0.0) {
    if (pred.size() != truth.size())
      throw InvalidInput("loss_tendon_gradient: EMD term requires equal sizes");
    auto [cost, plan] = emd_for_loss(pred, truth, cfg);
    out.emd = cost;
    out.emd_converged = plan.converged;
    out.loss += cfg.lambda * cost;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Point3 diff = pred.points[i] - truth.points[plan.pairing[i]];
      const double norm = diff.norm();
      if (norm >= 1e-12) out.grad[i] += (cfg.lambda / norm) * diff;
    }
  }
  return out;
}

inline LossGradient loss_tendon_gradient(const PointCloud& pred,
                                         const PointCloud& truth,
                                         double lambda) {
  LossConfig cfg;
  cfg.lambda = lambda;
  return loss_tendon_gradient(pred, truth, cfg);
}

/// Coefficient of variation of each point's distance to its nearest
/// neighbor within the same cloud; lower means more evenly spread points.
inline double nn_spacing_cv(const PointCloud& cloud) {
  if (cloud.size() < 2)
    throw InvalidInput("nn_spacing_cv: need at least 2 points");
  const std::size_t n = cloud.size();
  std::vector<double> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (cloud.points[i] - cloud.points[j]).squaredNorm();
      if (d2 < best) best = d2;
    }
    nn[i] = std::sqrt(best);
  }
  double mean = 0.0;
  for (double d : nn) mean += d;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : nn) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n);
  if (mean <= 0.0) return 0.0;
  return std::sqrt(var) / mean;
}

}  // namespace tdcr
