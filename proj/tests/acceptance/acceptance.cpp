// Acceptance suite: runs every shipped criterion (A1..A10) at its stated
// tolerance and prints one pass/fail line per criterion. Criteria that
// reuse expensive artifacts (datasets, trained models) share them through
// a context that is built on demand, so `--only A7` works standalone.

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <tdcr/cli.hpp>
#include <tdcr/dataset.hpp>
#include <tdcr/distances.hpp>
#include <tdcr/evaluation.hpp>
#include <tdcr/network.hpp>
#include <tdcr/registration.hpp>
#include <tdcr/robot_model.hpp>
#include <tdcr/training.hpp>

#include "../oracles.hpp"
#include "../test_util.hpp"

using namespace tdcr;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

#define CHECK_THAT(cond, label)                                   \
  do {                                                            \
    if (!(cond)) {                                                \
      out.pass = false;                                           \
      out.detail << " FAILED[" << (label) << "]";                 \
    }                                                             \
  } while (0)

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

// ---------------------------------------------------------------------
// Shared expensive artifacts.

struct Context {
  std::filesystem::path work;

  // A5/A6/A7 configuration: scaled comparison setup.
  RobotParams robot;
  HysteresisParams hysteresis;
  SimOptions sim;               // segments 256, n_raw 4096
  int M = 64;
  int levels = 11;              // 340 nominal configurations
  std::uint64_t data_seed = 424242;
  double noise_sigma = 0.0005;
  std::vector<int> hidden = {64, 128, 256, 512};

  std::optional<DatasetManifest> dataset;
  std::optional<DatasetManifest> traj_train;
  std::optional<DatasetManifest> traj_eval;
  std::optional<NetworkWeights> model_full;
  std::optional<NetworkWeights> model_nohys;
  std::optional<NetworkWeights> model_chamfer;
  std::optional<NetworkWeights> model_mse;
  std::optional<NetworkWeights> model_full_traj;
  std::optional<NetworkWeights> model_nohys_traj;

  TrainConfig train_config(LossKind loss, int max_epochs = 300) const {
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.loss = loss;
    cfg.lambda = 1.0;
    cfg.batch_size = 32;
    cfg.max_epochs = max_epochs;
    cfg.patience = 50;
    cfg.emd_exact_cap = 128;  // M=64: the EMD term is solved exactly
    return cfg;
  }

  NetworkSpec spec(int input_dim, int m) const {
    NetworkSpec s;
    s.input_dim = input_dim;
    s.hidden_dims = hidden;
    s.point_count = m;
    return s;
  }

  const DatasetManifest& ensure_dataset() {
    if (!dataset) {
      const auto nominal = generate_nominal_grid(robot, levels);
      std::vector<HysteresisConfig> etas = build_home_prior_set(robot, nominal);
      const auto aug = augment_random_prior(nominal, 2, data_seed + 1);
      etas.insert(etas.end(), aug.begin(), aug.end());
      MaterializeOptions opts;
      opts.noise_sigma = noise_sigma;
      opts.overwrite = true;
      opts.sim = sim;
      dataset = materialize(etas, robot, hysteresis, M, data_seed,
                            (work / "main").string(), opts);
      std::cerr << "  [setup] dataset: " << dataset->records.size()
                << " records (" << dataset->count(Split::Train) << "/"
                << dataset->count(Split::Val) << "/"
                << dataset->count(Split::Test) << " train/val/test)\n";
    }
    return *dataset;
  }

  const DatasetManifest& ensure_traj_train() {
    if (!traj_train) {
      const auto nominal = generate_nominal_grid(robot, levels);
      const auto trajs =
          generate_trajectories(robot, nominal, 240, 5, data_seed + 50);
      std::vector<HysteresisConfig> flat;
      for (const auto& t : trajs) flat.insert(flat.end(), t.begin(), t.end());
      MaterializeOptions opts;
      opts.noise_sigma = noise_sigma;
      opts.overwrite = true;
      opts.policy = SplitPolicy::AllTrain;
      opts.traj_len = 5;
      opts.sim = sim;
      traj_train = materialize(flat, robot, hysteresis, M, data_seed + 60,
                               (work / "traj_train").string(), opts);
    }
    return *traj_train;
  }

  const DatasetManifest& ensure_traj_eval() {
    if (!traj_eval) {
      const auto nominal = generate_nominal_grid(robot, levels);
      const auto trajs =
          generate_trajectories(robot, nominal, 6, 5, data_seed + 9999);
      std::vector<HysteresisConfig> flat;
      for (const auto& t : trajs) flat.insert(flat.end(), t.begin(), t.end());
      MaterializeOptions opts;
      opts.noise_sigma = noise_sigma;
      opts.overwrite = true;
      opts.policy = SplitPolicy::AllTest;
      opts.traj_len = 5;
      opts.sim = sim;
      traj_eval = materialize(flat, robot, hysteresis, M, data_seed + 70,
                              (work / "traj_eval").string(), opts);
    }
    return *traj_eval;
  }

  const NetworkWeights& ensure_model(std::optional<NetworkWeights>& slot,
                                     LossKind loss, bool hysteresis_input,
                                     bool with_traj, const char* name) {
    if (!slot) {
      const DatasetManifest& data = ensure_dataset();
      std::vector<const DatasetManifest*> extras;
      if (with_traj) extras.push_back(&ensure_traj_train());
      // The trajectory-augmented pair trains on a ~2.8x larger set, so it
      // gets a shorter (still identical within the pair) epoch budget.
      const TrainConfig cfg =
          train_config(loss, with_traj ? 240 : 300);
      const double t0 = now_seconds();
      auto [w, report] =
          hysteresis_input
              ? train(spec(2 * robot.tendon_count, M), data, cfg, extras)
              : train_no_hysteresis(spec(robot.tendon_count, M), data, cfg,
                                    extras);
      std::cerr << "  [setup] trained " << name << ": "
                << report.epochs.size() << " epochs, best val "
                << report.best_val_loss << " ("
                << (now_seconds() - t0) << " s)\n";
      // Exercise the serialization path the CLI uses.
      const std::string path = (work / (std::string(name) + ".bin")).string();
      save_weights(w, path);
      slot = load_weights(path);
    }
    return *slot;
  }
};

EvalModel net_model(const char* tag, const NetworkWeights& w,
                    bool hysteresis_input) {
  EvalModel m;
  m.tag = tag;
  m.kind = hysteresis_input ? EvalModel::Kind::HysteresisNet
                            : EvalModel::Kind::CurrentOnlyNet;
  m.weights = &w;
  return m;
}

EvalModel baseline_model(const RobotParams& robot) {
  EvalModel m;
  m.tag = "baseline";
  m.kind = EvalModel::Kind::Baseline;
  m.baseline_params = perturbed_baseline_params(robot);
  return m;
}

// ---------------------------------------------------------------------
// Criteria.

Outcome criterion_a1() {
  Outcome out;
  Rng rng(101);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.uniform_index(5);
    const PointCloud a = tdcr_test::random_cloud(n, rng);
    const PointCloud b = tdcr_test::random_cloud(n, rng);
    const auto [cost, plan] = emd_exact(a, b);
    const auto [expected, perm] = tdcr_test::brute_force_emd(a, b);
    CHECK_THAT(std::abs(cost - expected) <= 1e-9, "emd-equals-bruteforce");
  }
  Rng rng2(102);
  for (int it = 0; it < 200; ++it) {
    const PointCloud a = tdcr_test::random_cloud(1 + rng2.uniform_index(10), rng2);
    const PointCloud b = tdcr_test::random_cloud(1 + rng2.uniform_index(10), rng2);
    CHECK_THAT(chamfer_distance(a, a) == 0.0, "chamfer-identity");
    CHECK_THAT(std::abs(chamfer_distance(a, b) - chamfer_distance(b, a)) <=
                   1e-12,
               "chamfer-symmetry");
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(rng2.uniform(-3, 3),
                          Eigen::Vector3d(rng2.normal(), rng2.normal(),
                                          rng2.normal())
                              .normalized())
            .toRotationMatrix();
    const Point3 t(rng2.uniform(-1, 1), rng2.uniform(-1, 1),
                   rng2.uniform(-1, 1));
    RigidTransform rt;
    rt.rotation = R;
    rt.translation = t;
    const double before = chamfer_distance(a, b);
    const double after =
        chamfer_distance(apply_transform(rt, a), apply_transform(rt, b));
    CHECK_THAT(std::abs(before - after) <= 1e-9, "chamfer-rigid-invariance");
    const auto [ea, pa] = emd_exact(a, a);
    CHECK_THAT(ea <= 1e-12, "emd-identity");
  }
  out.detail << "200 brute-force EMD instances + 200 Chamfer property draws";
  return out;
}

Outcome criterion_a2() {
  Outcome out;
  RobotParams robot;
  const std::vector<Point3> fiducials = export_fiducials(robot);
  Rng rng(202);

  double worst_noiseless = 0.0;
  double worst_noisy = 0.0;
  for (int it = 0; it < 100; ++it) {
    RigidTransform truth;
    truth.rotation =
        Eigen::AngleAxisd(rng.uniform(-3, 3), Eigen::Vector3d(rng.normal(),
                                                              rng.normal(),
                                                              rng.normal())
                                                  .normalized())
            .toRotationMatrix();
    truth.translation =
        Point3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
               rng.uniform(-0.5, 0.5));

    CorrespondenceSet clean;
    clean.source = fiducials;
    for (const auto& f : fiducials) clean.target.push_back(truth * f);
    const RigidTransform rec = estimate_rigid_transform(clean);
    double rms = 0.0;
    for (std::size_t i = 0; i < fiducials.size(); ++i)
      rms += (rec * fiducials[i] - clean.target[i]).squaredNorm();
    rms = std::sqrt(rms / fiducials.size());
    worst_noiseless = std::max(worst_noiseless, rms);

    CorrespondenceSet noisy = clean;
    const double sigma = 1e-3;
    for (auto& t : noisy.target)
      t += Point3(rng.normal(0, sigma), rng.normal(0, sigma),
                  rng.normal(0, sigma));
    const RigidTransform rec_noisy = estimate_rigid_transform(noisy);
    double rms_noisy = 0.0;
    for (std::size_t i = 0; i < fiducials.size(); ++i)
      rms_noisy += (rec_noisy * fiducials[i] - noisy.target[i]).squaredNorm();
    rms_noisy = std::sqrt(rms_noisy / fiducials.size());
    worst_noisy = std::max(worst_noisy, rms_noisy);
    CHECK_THAT(rec_noisy.is_rigid(1e-9), "noisy-rotation-proper");
  }
  CHECK_THAT(worst_noiseless <= 1e-9, "noiseless-rms");
  CHECK_THAT(worst_noisy <= 3e-3, "noisy-rms");

  // Reflection correction on a dedicated near-planar case.
  CorrespondenceSet planar;
  planar.source = {Point3(1, 0, 0.02), Point3(0, 1, -0.015),
                   Point3(-1, 0, 0.01), Point3(0, -1, -0.02),
                   Point3(0.5, 0.5, 0.005)};
  for (const auto& p : planar.source)
    planar.target.emplace_back(p.x(), p.y(), -p.z());
  Point3 sc = Point3::Zero(), tc = Point3::Zero();
  for (std::size_t i = 0; i < planar.source.size(); ++i) {
    sc += planar.source[i];
    tc += planar.target[i];
  }
  sc /= 5.0;
  tc /= 5.0;
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < planar.source.size(); ++i)
    cross += (planar.source[i] - sc) * (planar.target[i] - tc).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CHECK_THAT((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0,
             "reflection-case-exercised");
  CHECK_THAT(estimate_rigid_transform(planar).is_rigid(1e-9),
             "reflection-corrected");

  out.detail << "100 recoveries; worst noiseless RMS " << worst_noiseless
             << " m, worst 1mm-noise RMS " << worst_noisy << " m";
  return out;
}

Outcome criterion_a3(Context& ctx) {
  Outcome out;
  const auto nominal = generate_nominal_grid(ctx.robot, 9);  // 224 configs
  CHECK_THAT(nominal.size() >= 200, "config-count");

  const QuantifyReport with_default = quantify_hysteresis(
      ctx.robot, ctx.hysteresis, nominal, 512, 0.0, 31337, ctx.sim);
  const double frac = with_default.tip_mean_fraction;
  CHECK_THAT(frac >= 0.06, "tip-separation-lower");
  CHECK_THAT(frac <= 0.12, "tip-separation-upper");

  HysteresisParams off;
  off.deadband = 0.0;
  const QuantifyReport without = quantify_hysteresis(
      ctx.robot, off, nominal, 128, 0.0, 31337, ctx.sim);
  CHECK_THAT(without.tip_mean == 0.0, "zero-deadband-exact-zero");
  CHECK_THAT(without.chamfer_mean == 0.0, "zero-deadband-clouds-identical");

  out.detail << nominal.size() << " configs; mean tip separation "
             << 100.0 * frac << "% of backbone length (target [6,12]%)";
  return out;
}

Outcome criterion_a4() {
  Outcome out;
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {3, 4, 5, 6};
  spec.point_count = 4;

  // Weight/data seeds picked so the instance sits away from ReLU kinks and
  // pairing ties (margins asserted below); finite differences are invalid
  // at those nondifferentiable points.
  NetworkWeights w = init_xavier(spec, 17);
  w.training_mode = true;
  Rng rng(117);
  Eigen::MatrixXd X(3, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) X(r, c) = rng.uniform(-0.8, 0.8);
  std::vector<PointCloud> truths;
  for (int r = 0; r < 3; ++r) truths.push_back(tdcr_test::random_cloud(4, rng));

  {
    NetworkWeights probe = w;
    ForwardCache cache;
    const Eigen::MatrixXd o0 = forward_batch(probe, X, &cache);
    for (const auto& pre : cache.pre_relu)
      CHECK_THAT(pre.cwiseAbs().minCoeff() > 1e-4, "relu-margin");
    for (int r = 0; r < 3; ++r) {
      const PointCloud pred = row_to_cloud(o0.row(r));
      const auto [best, plan] = emd_exact(pred, truths[r]);
      double second = std::numeric_limits<double>::infinity();
      std::vector<int> perm = {0, 1, 2, 3};
      do {
        double cost = 0.0;
        for (int i = 0; i < 4; ++i)
          cost += (pred.points[i] - truths[r].points[perm[i]]).norm();
        if (cost > best + 1e-12) second = std::min(second, cost);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK_THAT(second - best > 1e-3, "assignment-margin");
    }
  }

  auto mean_loss = [&](const NetworkWeights& weights, double lambda) {
    NetworkWeights copy = weights;
    copy.training_mode = true;
    const Eigen::MatrixXd o = forward_batch(copy, X);
    double total = 0.0;
    for (int r = 0; r < o.rows(); ++r)
      total += loss_tendon(row_to_cloud(o.row(r)), truths[r], lambda);
    return total / o.rows();
  };

  for (double lambda : {0.0, 1.0}) {
    NetworkWeights work = w;
    ForwardCache cache;
    const Eigen::MatrixXd o = forward_batch(work, X, &cache);
    Eigen::MatrixXd d_out(3, spec.output_dim());
    for (int r = 0; r < 3; ++r) {
      const LossGradient lg =
          loss_tendon_gradient(row_to_cloud(o.row(r)), truths[r], lambda);
      for (int j = 0; j < spec.point_count; ++j)
        d_out.block(r, 3 * j, 1, 3) = lg.grad[j].transpose() / 3.0;
    }
    const NetworkGrads grads = backward_from_cache(work, cache, d_out);

    NetworkWeights probe = w;
    // Walk every parameter tensor in the same order as the gradients.
    std::vector<double*> slots;
    std::vector<double> analytic;
    auto add_m = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& g) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        slots.push_back(m.data() + i);
        analytic.push_back(g.data()[i]);
      }
    };
    auto add_v = [&](Eigen::VectorXd& v, const Eigen::VectorXd& g) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        slots.push_back(v.data() + i);
        analytic.push_back(g.data()[i]);
      }
    };
    for (std::size_t li = 0; li < probe.hidden.size(); ++li) {
      add_m(probe.hidden[li].W, grads.hidden[li].W);
      add_v(probe.hidden[li].b, grads.hidden[li].b);
      add_v(probe.hidden[li].bn.scale, grads.hidden[li].bn_scale);
      add_v(probe.hidden[li].bn.shift, grads.hidden[li].bn_shift);
    }
    add_m(probe.W_out, grads.W_out);
    add_v(probe.b_out, grads.b_out);

    double err2 = 0.0, ref2 = 0.0;
    const double step = 1e-6;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const double saved = *slots[i];
      *slots[i] = saved + step;
      const double hi = mean_loss(probe, lambda);
      *slots[i] = saved - step;
      const double lo = mean_loss(probe, lambda);
      *slots[i] = saved;
      const double fd = (hi - lo) / (2.0 * step);
      err2 += (fd - analytic[i]) * (fd - analytic[i]);
      ref2 += fd * fd;
    }
    const double rel = std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-12);
    CHECK_THAT(rel <= 1e-4, lambda == 0.0 ? "chamfer-grad" : "full-grad");
    out.detail << (lambda == 0.0 ? "chamfer" : " / full") << " rel err "
               << rel;
  }
  return out;
}

Outcome criterion_a5(Context& ctx) {
  Outcome out;
  const DatasetManifest& data = ctx.ensure_dataset();
  CHECK_THAT(static_cast<int>(data.records.size() / 3) >= 300,
             "nominal-count");
  const NetworkWeights& full = ctx.ensure_model(
      ctx.model_full, LossKind::ChamferEmd, true, false, "full");
  const NetworkWeights& nohys = ctx.ensure_model(
      ctx.model_nohys, LossKind::ChamferEmd, false, false, "nohys");

  EvalOptions opts;
  opts.tip_k = 16;
  opts.seed = 99;
  opts.sim = ctx.sim;
  const EvalOutput result = run_comparison(
      data,
      {net_model("hys", full, true), net_model("non-hys", nohys, false),
       baseline_model(ctx.robot)},
      opts);
  const double hys = result.summary.models[0].chamfer_mean;
  const double non = result.summary.models[1].chamfer_mean;
  const double base = result.summary.models[2].chamfer_mean;
  CHECK_THAT(result.summary.models[0].n == 50, "test-split-size");
  CHECK_THAT(hys <= non / 1.5, "hys-vs-nonhys-ratio");
  CHECK_THAT(base >= non, "baseline-worst");

  write_metrics_csv((ctx.work / "a5_metrics.csv").string(), result.rows);
  write_summary_json((ctx.work / "a5_summary.json").string(), result.summary);

  out.detail << "chamfer mean: hys " << hys << ", non-hys " << non
             << " (ratio " << non / hys << ", need >= 1.5), baseline "
             << base;
  return out;
}

Outcome criterion_a6(Context& ctx) {
  Outcome out;
  const DatasetManifest& data = ctx.ensure_dataset();
  const NetworkWeights& full = ctx.ensure_model(
      ctx.model_full, LossKind::ChamferEmd, true, false, "full");
  const NetworkWeights& chamfer_only = ctx.ensure_model(
      ctx.model_chamfer, LossKind::Chamfer, true, false, "chamfer");
  const NetworkWeights& mse = ctx.ensure_model(
      ctx.model_mse, LossKind::Mse, true, false, "mse");

  EvalOptions opts;
  opts.tip_k = 16;
  opts.seed = 99;
  opts.sim = ctx.sim;
  const EvalOutput result = run_loss_ablation(
      data,
      {net_model("chamfer-emd", full, true),
       net_model("chamfer", chamfer_only, true), net_model("mse", mse, true)},
      opts);
  const double full_mean = result.summary.models[0].chamfer_mean;
  const double chamfer_mean = result.summary.models[1].chamfer_mean;
  const double mse_mean = result.summary.models[2].chamfer_mean;
  CHECK_THAT(mse_mean >= 10.0 * full_mean, "mse-at-least-10x-worse");
  CHECK_THAT(full_mean <= chamfer_mean, "full-no-worse-than-chamfer");
  const double frac = result.summary.extra.at(
      "frac_chamfer-emd_more_uniform_than_chamfer");
  CHECK_THAT(frac >= 0.8, "uniformity-fraction");

  write_summary_json((ctx.work / "a6_summary.json").string(), result.summary);
  out.detail << "test chamfer: full " << full_mean << ", chamfer-only "
             << chamfer_mean << ", mse " << mse_mean << "; full more uniform on "
             << 100.0 * frac << "% of records";
  return out;
}

Outcome criterion_a7(Context& ctx) {
  Outcome out;
  ctx.ensure_dataset();
  const DatasetManifest& traj_train_set = ctx.ensure_traj_train();
  CHECK_THAT(traj_train_set.records.size() == 1200, "augmentation-size");
  const DatasetManifest& eval_set = ctx.ensure_traj_eval();
  CHECK_THAT(eval_set.records.size() == 30, "eval-trajectory-size");

  const NetworkWeights& full = ctx.ensure_model(
      ctx.model_full_traj, LossKind::ChamferEmd, true, true, "full_traj");
  const NetworkWeights& nohys = ctx.ensure_model(
      ctx.model_nohys_traj, LossKind::ChamferEmd, false, true, "nohys_traj");

  EvalOptions opts;
  opts.tip_k = 16;
  opts.seed = 77;
  opts.sim = ctx.sim;
  const EvalOutput result = run_trajectory_eval(
      eval_set,
      {net_model("hys", full, true), net_model("non-hys", nohys, false),
       baseline_model(ctx.robot)},
      opts);
  const double hys = result.summary.models[0].chamfer_mean;
  const double non = result.summary.models[1].chamfer_mean;
  const double base = result.summary.models[2].chamfer_mean;
  CHECK_THAT(result.rows.size() == 90, "rows-30-per-model");
  CHECK_THAT(hys < non, "ordering-hys-best");
  CHECK_THAT(non < base, "ordering-baseline-worst");
  CHECK_THAT(hys <= non / 1.3, "hys-vs-nonhys-traj-ratio");

  write_metrics_csv((ctx.work / "a7_metrics.csv").string(), result.rows,
                    true);
  write_summary_json((ctx.work / "a7_summary.json").string(), result.summary);
  out.detail << "trajectory chamfer mean: hys " << hys << ", non-hys " << non
             << " (ratio " << non / hys << ", need >= 1.3), baseline "
             << base;
  return out;
}

Outcome criterion_a8(Context& ctx) {
  Outcome out;
  // Timing at the full output resolution (M=512, S=256) with the suite's
  // scaled decoder widths.
  const NetworkSpec spec = ctx.spec(2 * ctx.robot.tendon_count, 512);
  const NetworkWeights weights = init_xavier(spec, 3);
  SimOptions sim;
  sim.segments = 256;
  sim.n_raw = 4096;
  const TimingReport report = bench_timing(
      weights, perturbed_baseline_params(ctx.robot), 512, 100, sim);
  CHECK_THAT(report.net_ms.size() == 100, "run-count");
  CHECK_THAT(report.speedup >= 10.0, "speedup-at-least-10x");
  CHECK_THAT(report.net_std <= 0.5 * report.net_mean, "net-timing-stable");

  write_timing_report((ctx.work / "a8_bench.csv").string(),
                      (ctx.work / "a8_bench.json").string(), report);
  out.detail << "net " << report.net_mean << " ms vs baseline "
             << report.baseline_mean << " ms -> speedup " << report.speedup
             << "x (need >= 10)";
  return out;
}

Outcome criterion_a9(Context& ctx) {
  Outcome out;
  const std::filesystem::path base = ctx.work / "a9";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);

  ExperimentConfig cfg;
  cfg.dataset.levels = 3;
  cfg.dataset.M = 16;
  cfg.dataset.n_raw = 64;
  cfg.dataset.segments = 32;
  cfg.hidden_dims = {8, 16, 24, 32};
  cfg.training.max_epochs = 5;
  cfg.training.patience = 5;
  cfg.training.batch_size = 8;
  const std::string cfg_path = (base / "config.json").string();
  save_experiment_config(cfg_path, cfg);

  auto slurp = [](const std::string& p) { return tdcr_test::slurp(p); };
  auto gen_to = [&](const std::string& dir) {
    const int rc = cli_main({"gen", "--config", cfg_path, "--out", dir,
                             "--seed", "5"});
    if (rc != 0) throw std::runtime_error("gen failed");
  };

  setenv("TDCR_THREADS", "1", 1);
  gen_to((base / "d1").string());
  gen_to((base / "d2").string());
  setenv("TDCR_THREADS", "4", 1);
  gen_to((base / "d4").string());

  const DatasetManifest m1 = load_manifest((base / "d1").string());
  bool identical_12 = slurp((base / "d1/manifest.jsonl").string()) ==
                      slurp((base / "d2/manifest.jsonl").string());
  bool identical_14 = slurp((base / "d1/manifest.jsonl").string()) ==
                      slurp((base / "d4/manifest.jsonl").string());
  for (const auto& rec : m1.records) {
    identical_12 = identical_12 &&
                   slurp((base / "d1" / rec.cloud_path).string()) ==
                       slurp((base / "d2" / rec.cloud_path).string());
    identical_14 = identical_14 &&
                   slurp((base / "d1" / rec.cloud_path).string()) ==
                       slurp((base / "d4" / rec.cloud_path).string());
  }
  CHECK_THAT(identical_12, "gen-rerun-identical");
  CHECK_THAT(identical_14, "gen-threads-identical");

  NetworkSpec spec;
  spec.input_dim = 8;
  spec.hidden_dims = cfg.hidden_dims;
  spec.point_count = 16;
  TrainConfig tc = cfg.training;
  tc.seed = 3;
  setenv("TDCR_THREADS", "1", 1);
  const auto [w1, r1] = train(spec, m1, tc);
  const auto [w2, r2] = train(spec, m1, tc);
  setenv("TDCR_THREADS", "4", 1);
  const auto [w3, r3] = train(spec, m1, tc);
  unsetenv("TDCR_THREADS");

  CHECK_THAT(deterministic_equal(r1, r2), "train-rerun-report");
  CHECK_THAT(deterministic_equal(r1, r3), "train-threads-report");
  const std::string wa = (base / "w1.bin").string();
  const std::string wb = (base / "w3.bin").string();
  save_weights(w1, wa);
  save_weights(w3, wb);
  CHECK_THAT(slurp(wa) == slurp(wb), "train-threads-weights-bitwise");

  out.detail << "gen and train byte-stable across reruns and TDCR_THREADS in "
                "{1,4}";
  return out;
}

Outcome criterion_a10(Context& ctx) {
  Outcome out;
  RobotParams p = ctx.robot;

  Config quarter = zero_config(p);
  quarter.q(0) = 0.0157080;
  const Point3 tip = backbone_from_config(p, quarter, 256).tip().position;
  CHECK_THAT((tip - Point3(0.127324, 0.0, 0.127324)).norm() <= 1e-6,
             "closed-form-tip");

  Rng rng(1010);
  double worst_planar = 0.0, worst_sym = 0.0, worst_conv = 0.0;
  for (int it = 0; it < 100; ++it) {
    // Planarity of single straight tendon bends.
    const int tendon = static_cast<int>(rng.uniform_index(3));
    Config single = zero_config(p);
    single.q(tendon) = rng.uniform(0.001, p.q_max);
    const BackboneCurve curve = backbone_from_config(p, single, 256);
    const Eigen::Vector3d dir(std::cos(p.straight_tendon_angles[tendon]),
                              std::sin(p.straight_tendon_angles[tendon]), 0.0);
    const Eigen::Vector3d normal = dir.cross(Eigen::Vector3d::UnitZ());
    for (const auto& s : curve.samples)
      worst_planar = std::max(worst_planar, std::abs(normal.dot(s.position)));

    // Symmetry: rotating tendon labels rotates the shape.
    Config c = zero_config(p);
    c.q(0) = rng.uniform(0.0, p.q_max);
    c.q(1) = rng.uniform(0.0, p.q_max);
    Config rotated = zero_config(p);
    rotated.q(1) = c.q(0);
    rotated.q(2) = c.q(1);
    const Eigen::Matrix3d Rz =
        Eigen::AngleAxisd(kTwoPi / 3.0, Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    const Point3 t1 =
        Rz * backbone_from_config(p, c, 128).tip().position;
    const Point3 t2 = backbone_from_config(p, rotated, 128).tip().position;
    worst_sym = std::max(worst_sym, (t1 - t2).norm());

    // Discretization self-convergence, helical tendon included.
    Config any = zero_config(p);
    if (rng.uniform() < 0.3) {
      any.q(3) = rng.uniform(0.0, p.q_max);
    } else {
      any.q(0) = rng.uniform(0.0, p.q_max);
      any.q(1) = rng.uniform(0.0, p.q_max);
    }
    const Point3 coarse = backbone_from_config(p, any, 256).tip().position;
    const Point3 fine = backbone_from_config(p, any, 2048).tip().position;
    worst_conv = std::max(worst_conv, (coarse - fine).norm());
  }
  CHECK_THAT(worst_planar <= 1e-9, "planarity");
  CHECK_THAT(worst_sym <= 1e-9, "symmetry");
  CHECK_THAT(worst_conv <= 1e-6, "s-convergence");

  out.detail << "tip err " << (tip - Point3(0.127324, 0.0, 0.127324)).norm()
             << " m; worst planarity " << worst_planar << ", symmetry "
             << worst_sym << ", convergence " << worst_conv;
  return out;
}

struct Criterion {
  const char* id;
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.push_back(tok);
    }
  }

  Context ctx;
  ctx.work = std::filesystem::path("acceptance_work");
  std::filesystem::create_directories(ctx.work);

  const std::vector<Criterion> criteria = {
      {"A1", "metric correctness (EMD vs brute force, Chamfer properties)",
       10.0, [&] { return criterion_a1(); }},
      {"A2", "registration recovery and reflection correction", 5.0,
       [&] { return criterion_a2(); }},
      {"A3", "hysteresis quantification lands in the calibrated band", 120.0,
       [&] { return criterion_a3(ctx); }},
      {"A4", "gradient fidelity on the tiny network", 60.0,
       [&] { return criterion_a4(); }},
      {"A5", "model comparison: hysteresis vs ablation vs baseline", 1800.0,
       [&] { return criterion_a5(ctx); }},
      {"A6", "loss ablation: mse / chamfer / chamfer+emd", 1800.0,
       [&] { return criterion_a6(ctx); }},
      {"A7", "trajectory evaluation with augmentation", 600.0,
       [&] { return criterion_a7(ctx); }},
      {"A8", "timing: decoder inference vs simulator generation", 120.0,
       [&] { return criterion_a8(ctx); }},
      {"A9", "bitwise determinism across reruns and thread counts", 300.0,
       [&] { return criterion_a9(ctx); }},
      {"A10", "simulator fidelity (closed form, symmetry, convergence)", 60.0,
       [&] { return criterion_a10(ctx); }},
  };

  // Trained-model reuse makes A6/A7 cheaper after A5; their time limits
  // assume A5's artifacts exist, so account setup time to the first user.
  bool all_pass = true;
  for (const auto& criterion : criteria) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), criterion.id) == only.end())
      continue;
    const double t0 = now_seconds();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << " exception: " << e.what();
    }
    const double elapsed = now_seconds() - t0;
    if (elapsed > criterion.time_limit_s) {
      outcome.pass = false;
      outcome.detail << " OVER TIME LIMIT (" << criterion.time_limit_s
                     << " s)";
    }
    all_pass = all_pass && outcome.pass;
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << criterion.id
              << " " << criterion.title << ": " << outcome.detail.str()
              << " [" << elapsed << " s]" << std::endl;
  }
  return all_pass ? 0 : 1;
}
