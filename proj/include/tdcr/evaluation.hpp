#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdcr/dataset.hpp"
#include "tdcr/distances.hpp"
#include "tdcr/errors.hpp"
#include "tdcr/network.hpp"
#include "tdcr/parallel.hpp"
#include "tdcr/ply_io.hpp"
#include "tdcr/robot_model.hpp"

namespace tdcr {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

/// Per-(record, model) evaluation result. Chamfer is the exact metric in
/// m^2; tip error in meters. traj/step are set only for trajectory runs.
struct MetricsRow {
  std::int64_t id = 0;
  std::string model;
  double chamfer_m2 = 0.0;
  double tip_error_m = 0.0;
  int traj = -1;
  int step = -1;  // 1-based within a trajectory
};

struct ModelAggregate {
  std::string model;
  std::size_t n = 0;
  double chamfer_mean = 0.0, chamfer_std = 0.0;
  double tip_mean = 0.0, tip_std = 0.0;
  double uniformity_mean = 0.0;
};

struct SummaryReport {
  std::vector<ModelAggregate> models;
  // "A_over_B" -> mean chamfer of A divided by mean chamfer of B.
  std::map<std::string, double> ratios;
  std::map<std::string, double> extra;
};

/// Tip position read off an unordered predicted cloud: optimally assign
/// predicted points to the labeled truth cloud, then average the predicted
/// points matched to the k truth points of largest arc length.
inline double tip_error(const PointCloud& pred, const PointCloud& truth,
                        const Point3& true_tip, int k = 16) {
  if (!truth.has_arclen())
    throw InvalidInput("tip_error: truth cloud lacks arclen labels");
  if (pred.size() != truth.size())
    throw InvalidInput("tip_error: cloud size mismatch");
  const int n = static_cast<int>(pred.size());
  if (k < 1) throw InvalidInput("tip_error: k must be >= 1");
  if (k > n) k = n;

  // One-off exact assignment; the training-time size cap does not apply.
  const auto [cost, plan] = emd_exact(pred, truth, std::max(n, 256));
  (void)cost;
  std::vector<int> pred_of_truth(n, -1);
  for (int i = 0; i < n; ++i) pred_of_truth[plan.pairing[i]] = i;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](int a, int b) {
                      if (truth.arclen[a] != truth.arclen[b])
                        return truth.arclen[a] > truth.arclen[b];
                      return a < b;
                    });
  Point3 centroid = Point3::Zero();
  for (int j = 0; j < k; ++j) centroid += pred.points[pred_of_truth[order[j]]];
  centroid /= static_cast<double>(k);
  return (centroid - true_tip).norm();
}

// --- hysteresis quantification -------------------------------------------

struct QuantifyRow {
  std::size_t index = 0;   // nominal configuration index
  double chamfer_m2 = 0.0; // home-prior vs random-prior clouds
  double tip_sep_m = 0.0;  // exact backbone tip separation
};

struct QuantifyReport {
  std::vector<QuantifyRow> rows;
  double chamfer_mean = 0.0, chamfer_std = 0.0;
  double tip_mean = 0.0, tip_std = 0.0;
  double tip_mean_fraction = 0.0;  // of backbone length
  double backbone_length = 0.0;
};

/// For every nominal configuration, compare the shape reached from the home
/// prior against the shape reached from a random prior: cloud Chamfer
/// distance plus exact backbone tip separation. Cloud pairs share a seed,
/// so a zero deadband yields exactly zero difference.
inline QuantifyReport quantify_hysteresis(const RobotParams& robot,
                                          const HysteresisParams& hp,
                                          const std::vector<Config>& nominal,
                                          int M, double noise_sigma,
                                          std::uint64_t seed,
                                          const SimOptions& opt = {}) {
  if (nominal.size() < 2)
    throw InvalidInput("quantify_hysteresis: need at least 2 configurations");
  Rng rng(seed);
  std::vector<std::size_t> prior_idx(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    std::size_t j = rng.uniform_index(nominal.size() - 1);
    if (j >= i) ++j;
    prior_idx[i] = j;
  }

  const Config home{Eigen::VectorXd::Zero(robot.tendon_count)};
  QuantifyReport report;
  report.backbone_length = robot.backbone_length;
  report.rows.resize(nominal.size());
  parallel_for(nominal.size(), [&](std::size_t i) {
    const HysteresisConfig eta_home{home, nominal[i]};
    const HysteresisConfig eta_rand{nominal[prior_idx[i]], nominal[i]};
    const std::uint64_t cloud_seed = seed + i;
    const PointCloud c_home =
        ground_truth_cloud(robot, hp, eta_home, M, noise_sigma, cloud_seed, opt);
    const PointCloud c_rand =
        ground_truth_cloud(robot, hp, eta_rand, M, noise_sigma, cloud_seed, opt);
    QuantifyRow row;
    row.index = i;
    row.chamfer_m2 = chamfer_distance(c_home, c_rand);
    row.tip_sep_m = (true_tip_position(robot, hp, eta_home, opt.segments) -
                     true_tip_position(robot, hp, eta_rand, opt.segments))
                        .norm();
    report.rows[i] = row;
  });

  std::vector<double> chamfers, tips;
  for (const auto& r : report.rows) {
    chamfers.push_back(r.chamfer_m2);
    tips.push_back(r.tip_sep_m);
  }
  std::tie(report.chamfer_mean, report.chamfer_std) = mean_std(chamfers);
  std::tie(report.tip_mean, report.tip_std) = mean_std(tips);
  report.tip_mean_fraction = report.tip_mean / robot.backbone_length;
  return report;
}

// --- model evaluation ------------------------------------------------------

/// A model under evaluation: a trained decoder (with or without hysteresis
/// input) or the analytic baseline with its own parameter set.
struct EvalModel {
  enum class Kind { HysteresisNet, CurrentOnlyNet, Baseline };
  std::string tag;
  Kind kind = Kind::HysteresisNet;
  const NetworkWeights* weights = nullptr;
  RobotParams baseline_params;
};

struct EvalOptions {
  int tip_k = 16;
  std::uint64_t seed = 0;  // baseline sampling seeds derive from this + id
  SimOptions sim;
};

struct EvalOutput {
  std::vector<MetricsRow> rows;  // record-major, models in given order
  std::map<std::string, std::vector<double>> uniformity;  // per model
  SummaryReport summary;
};

namespace detail {

inline PointCloud predict(const EvalModel& model, const DatasetRecord& rec,
                          int M, const EvalOptions& opts) {
  switch (model.kind) {
    case EvalModel::Kind::HysteresisNet:
      return forward_single(*model.weights, hysteresis_input(rec.eta));
    case EvalModel::Kind::CurrentOnlyNet:
      return forward_single(*model.weights, rec.eta.q_current.q);
    case EvalModel::Kind::Baseline:
      return baseline_cloud(model.baseline_params, rec.eta.q_current, M,
                            opts.seed + static_cast<std::uint64_t>(rec.id),
                            opts.sim);
  }
  throw InvalidInput("predict: unknown model kind");
}

inline EvalOutput evaluate_records(const DatasetManifest& manifest,
                                   const std::vector<const DatasetRecord*>& records,
                                   const std::vector<EvalModel>& models,
                                   const EvalOptions& opts,
                                   int traj_len = 0) {
  if (records.empty()) throw InvalidInput("evaluate: no records selected");
  if (models.empty()) throw InvalidInput("evaluate: no models given");
  for (const auto& m : models) {
    if (m.kind != EvalModel::Kind::Baseline && m.weights == nullptr)
      throw InvalidInput("evaluate: model '" + m.tag + "' has no weights");
  }

  const std::size_t n_rec = records.size();
  const std::size_t n_mod = models.size();
  std::vector<MetricsRow> rows(n_rec * n_mod);
  std::vector<std::vector<double>> unif(n_mod,
                                        std::vector<double>(n_rec, 0.0));

  parallel_for(n_rec, [&](std::size_t ri) {
    const DatasetRecord& rec = *records[ri];
    const PointCloud truth = read_ply(manifest.resolve(rec.cloud_path));
    const Point3 tip = true_tip_position(manifest.robot, manifest.hysteresis,
                                         rec.eta, opts.sim.segments);
    for (std::size_t mi = 0; mi < n_mod; ++mi) {
      const PointCloud pred = predict(models[mi], rec, manifest.M, opts);
      MetricsRow row;
      row.id = rec.id;
      row.model = models[mi].tag;
      row.chamfer_m2 = chamfer_distance(pred, truth);
      row.tip_error_m = tip_error(pred, truth, tip, opts.tip_k);
      if (traj_len > 0) {
        row.traj = static_cast<int>(rec.id / traj_len);
        row.step = static_cast<int>(rec.id % traj_len) + 1;
      }
      rows[ri * n_mod + mi] = std::move(row);
      unif[mi][ri] = nn_spacing_cv(pred);
    }
  });

  EvalOutput out;
  out.rows = std::move(rows);
  for (std::size_t mi = 0; mi < n_mod; ++mi) {
    out.uniformity[models[mi].tag] = std::move(unif[mi]);

    ModelAggregate agg;
    agg.model = models[mi].tag;
    std::vector<double> chamfers, tips;
    for (std::size_t ri = 0; ri < n_rec; ++ri) {
      chamfers.push_back(out.rows[ri * n_mod + mi].chamfer_m2);
      tips.push_back(out.rows[ri * n_mod + mi].tip_error_m);
    }
    agg.n = n_rec;
    std::tie(agg.chamfer_mean, agg.chamfer_std) = mean_std(chamfers);
    std::tie(agg.tip_mean, agg.tip_std) = mean_std(tips);
    agg.uniformity_mean = mean_std(out.uniformity[models[mi].tag]).first;
    out.summary.models.push_back(agg);
  }
  for (const auto& a : out.summary.models)
    for (const auto& b : out.summary.models) {
      if (a.model == b.model || b.chamfer_mean == 0.0) continue;
      out.summary.ratios[a.model + "_over_" + b.model] =
          a.chamfer_mean / b.chamfer_mean;
    }
  return out;
}

}  // namespace detail

/// Evaluates every model on the manifest's test split.
inline EvalOutput run_comparison(const DatasetManifest& manifest,
                                 const std::vector<EvalModel>& models,
                                 const EvalOptions& opts = {}) {
  std::vector<const DatasetRecord*> records;
  for (const auto& rec : manifest.records)
    if (rec.split == Split::Test) records.push_back(&rec);
  return detail::evaluate_records(manifest, records, models, opts);
}

/// Loss-ablation evaluation: like run_comparison, but also reports how
/// often the first model's clouds are more evenly spread than the second's
/// (extra key "frac_<A>_more_uniform_than_<B>" for consecutive pairs).
inline EvalOutput run_loss_ablation(const DatasetManifest& manifest,
                                    const std::vector<EvalModel>& models,
                                    const EvalOptions& opts = {}) {
  EvalOutput out = run_comparison(manifest, models, opts);
  for (std::size_t a = 0; a + 1 < models.size(); ++a) {
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      const auto& ua = out.uniformity.at(models[a].tag);
      const auto& ub = out.uniformity.at(models[b].tag);
      std::size_t wins = 0;
      for (std::size_t i = 0; i < ua.size(); ++i) wins += ua[i] < ub[i] ? 1 : 0;
      out.summary.extra["frac_" + models[a].tag + "_more_uniform_than_" +
                        models[b].tag] =
          static_cast<double>(wins) / static_cast<double>(ua.size());
    }
  }
  return out;
}

/// Evaluates chained trajectories: every record of the manifest, annotated
/// with trajectory id and 1-based step. The hysteresis model consumes the
/// true executed (previous, current) pair at each step.
inline EvalOutput run_trajectory_eval(const DatasetManifest& manifest,
                                      const std::vector<EvalModel>& models,
                                      const EvalOptions& opts = {}) {
  const int L = manifest.traj_len;
  if (L < 2)
    throw InvalidInput("run_trajectory_eval: manifest is not a trajectory set");
  if (manifest.records.size() % L != 0)
    throw InvalidInput("run_trajectory_eval: record count not a multiple of "
                       "the trajectory length");
  // Chain validation: step 0 starts from home, then priors follow currents.
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& rec = manifest.records[i];
    if (rec.id != static_cast<std::int64_t>(i))
      throw InvalidInput("run_trajectory_eval: records must be ordered by id");
    if (i % L == 0) {
      if (!rec.eta.q_prior.q.isZero(0.0))
        throw InvalidInput("run_trajectory_eval: trajectory " +
                           std::to_string(i / L) + " does not start from home");
    } else {
      const auto& prev = manifest.records[i - 1];
      if (rec.eta.q_prior.q != prev.eta.q_current.q)
        throw InvalidInput("run_trajectory_eval: broken chaining at record " +
                           std::to_string(i));
    }
  }
  std::vector<const DatasetRecord*> records;
  for (const auto& rec : manifest.records) records.push_back(&rec);
  return detail::evaluate_records(manifest, records, models, opts, L);
}

// --- timing ---------------------------------------------------------------

struct TimingReport {
  std::vector<double> net_ms, baseline_ms;
  double net_mean = 0.0, net_std = 0.0;
  double baseline_mean = 0.0, baseline_std = 0.0;
  double speedup = 0.0;  // baseline_mean / net_mean
};

/// Wall-clock per shape for (a) decoder inference and (b) analytic baseline
/// generation, single-threaded, after warm-up.
inline TimingReport bench_timing(const NetworkWeights& weights,
                                 const RobotParams& baseline_params,
                                 int M, int n_runs = 100,
                                 const SimOptions& opt = {}) {
  if (n_runs < 1) throw InvalidInput("bench_timing: n_runs must be >= 1");
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(weights.spec.input_dim);
  for (int i = 0; i < eta.size(); ++i)
    eta(i) = 0.5 * baseline_params.q_max * (i % 2 == 0 ? 1.0 : 0.5);
  Config q = zero_config(baseline_params);
  q.q(0) = 0.5 * baseline_params.q_max;

  volatile double sink = 0.0;
  for (int i = 0; i < 3; ++i) {
    sink = sink + forward_single(weights, eta).points[0].x();
    sink = sink + baseline_cloud(baseline_params, q, M, i, opt).points[0].x();
  }

  TimingReport report;
  using clock = std::chrono::steady_clock;
  for (int run = 0; run < n_runs; ++run) {
    auto t0 = clock::now();
    const PointCloud net_cloud = forward_single(weights, eta);
    auto t1 = clock::now();
    sink = sink + net_cloud.points[0].x();
    report.net_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());

    t0 = clock::now();
    const PointCloud base_cloud =
        baseline_cloud(baseline_params, q, M, static_cast<std::uint64_t>(run),
                       opt);
    t1 = clock::now();
    sink = sink + base_cloud.points[0].x();
    report.baseline_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::tie(report.net_mean, report.net_std) = mean_std(report.net_ms);
  std::tie(report.baseline_mean, report.baseline_std) =
      mean_std(report.baseline_ms);
  report.speedup = report.baseline_mean / report.net_mean;
  return report;
}

// --- report emission --------------------------------------------------------

namespace detail {
inline std::string full_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

/// metrics.csv: id,model,chamfer_m2,tip_error_m[,traj,step]. Doubles are
/// written with 17 significant digits so summaries recompute exactly.
inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricsRow>& rows,
                              bool with_traj = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << "id,model,chamfer_m2,tip_error_m";
  if (with_traj) out << ",traj,step";
  out << "\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.model << ','
        << detail::full_double(r.chamfer_m2) << ','
        << detail::full_double(r.tip_error_m);
    if (with_traj) out << ',' << r.traj << ',' << r.step;
    out << "\n";
  }
  if (!out) throw IoError(path, "write failure");
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path, "empty file");
  const bool with_traj = line.find(",traj,step") != std::string::npos;
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    MetricsRow r;
    std::size_t pos = 0;
    auto next_field = [&]() {
      const std::size_t comma = line.find(',', pos);
      std::string field = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? line.size() : comma + 1;
      return field;
    };
    try {
      r.id = std::stoll(next_field());
      r.model = next_field();
      r.chamfer_m2 = std::stod(next_field());
      r.tip_error_m = std::stod(next_field());
      if (with_traj) {
        r.traj = std::stoi(next_field());
        r.step = std::stoi(next_field());
      }
    } catch (const std::exception&) {
      throw IoError(path, "line " + std::to_string(lineno) + ": parse error");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_summary_json(const std::string& path,
                               const SummaryReport& summary) {
  nlohmann::json j;
  j["models"] = nlohmann::json::object();
  for (const auto& m : summary.models) {
    j["models"][m.model] = {
        {"n", m.n},
        {"chamfer_mean", m.chamfer_mean},
        {"chamfer_std", m.chamfer_std},
        {"tip_mean", m.tip_mean},
        {"tip_std", m.tip_std},
        {"uniformity_mean", m.uniformity_mean}};
  }
  j["ratios"] = summary.ratios;
  j["extra"] = summary.extra;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path, "write failure");
}

inline void write_quantify_report(const std::string& csv_path,
                                  const std::string& json_path,
                                  const QuantifyReport& report) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw IoError(csv_path, "cannot open for writing");
  out << "index,chamfer_m2,tip_sep_m\n";
  for (const auto& r : report.rows)
    out << r.index << ',' << detail::full_double(r.chamfer_m2) << ','
        << detail::full_double(r.tip_sep_m) << "\n";
  if (!out) throw IoError(csv_path, "write failure");

  nlohmann::json j;
  j["chamfer_mean"] = report.chamfer_mean;
  j["chamfer_std"] = report.chamfer_std;
  j["tip_mean"] = report.tip_mean;
  j["tip_std"] = report.tip_std;
  j["tip_mean_fraction_of_length"] = report.tip_mean_fraction;
  j["backbone_length"] = report.backbone_length;
  j["count"] = report.rows.size();
  std::ofstream jout(json_path, std::ios::binary);
  if (!jout) throw IoError(json_path, "cannot open for writing");
  jout << j.dump(2) << "\n";
  if (!jout) throw IoError(json_path, "write failure");
}

inline void write_timing_report(const std::string& csv_path,
                                const std::string& json_path,
                                const TimingReport& report) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw IoError(csv_path, "cannot open for writing");
  out << "run,net_ms,baseline_ms\n";
  for (std::size_t i = 0; i < report.net_ms.size(); ++i)
    out << i << ',' << detail::full_double(report.net_ms[i]) << ','
        << detail::full_double(report.baseline_ms[i]) << "\n";
  if (!out) throw IoError(csv_path, "write failure");

  nlohmann::json j;
  j["net_mean_ms"] = report.net_mean;
  j["net_std_ms"] = report.net_std;
  j["baseline_mean_ms"] = report.baseline_mean;
  j["baseline_std_ms"] = report.baseline_std;
  j["speedup"] = report.speedup;
  j["runs"] = report.net_ms.size();
  std::ofstream jout(json_path, std::ios::binary);
  if (!jout) throw IoError(json_path, "cannot open for writing");
  jout << j.dump(2) << "\n";
  if (!jout) throw IoError(json_path, "write failure");
}

}  // namespace tdcr
