#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdcr/dataset.hpp"
#include "tdcr/distances.hpp"
#include "tdcr/errors.hpp"
#include "tdcr/network.hpp"
#include "tdcr/parallel.hpp"
#include "tdcr/ply_io.hpp"
#include "tdcr/random.hpp"

namespace tdcr {

enum class LossKind { Mse, Chamfer, ChamferEmd };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::Chamfer: return "chamfer";
    case LossKind::ChamferEmd: return "chamfer-emd";
  }
  return "?";
}

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "chamfer") return LossKind::Chamfer;
  if (name == "chamfer-emd") return LossKind::ChamferEmd;
  throw InvalidInput("unknown loss kind: " + name);
}

struct TrainConfig {
  double lr = 0.01;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 100;  // epochs
  int batch_size = 32;
  int patience = 50;   // epochs without validation improvement
  int max_epochs = 500;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  LossKind loss = LossKind::ChamferEmd;
  // EMD solver policy inside the training loss; exact up to this size,
  // entropic approximation above it.
  int emd_exact_cap = 128;
  double emd_reg_scale = 0.01;
  int emd_iters = 200;
};

inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;  // wall clock; excluded from determinism checks
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  int stop_epoch = -1;  // index of the last epoch run
};

/// Equality on everything reproducible (wall-clock times are not).
inline bool deterministic_equal(const TrainReport& a, const TrainReport& b) {
  if (a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch ||
      a.stop_epoch != b.stop_epoch || a.best_val_loss != b.best_val_loss)
    return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    if (a.epochs[i].train_loss != b.epochs[i].train_loss ||
        a.epochs[i].val_loss != b.epochs[i].val_loss ||
        a.epochs[i].lr != b.epochs[i].lr)
      return false;
  }
  return true;
}

struct TrainSample {
  Eigen::VectorXd input;
  PointCloud truth;
};

struct TrainingData {
  std::vector<TrainSample> train;
  std::vector<TrainSample> val;
  int input_dim = 0;
  int M = 0;
};

/// Loads clouds and builds model inputs from one or more manifests. The
/// full model consumes the (prior, current) pair of every record; the
/// non-hysteresis variant consumes only the current configuration and sees
/// just the home-prior records of the base manifest, while records from
/// `extras` (trajectory augmentation) are included for both variants.
inline TrainingData assemble_training_data(
    const DatasetManifest& manifest, bool use_hysteresis,
    const std::vector<const DatasetManifest*>& extras = {}) {
  TrainingData data;
  data.M = manifest.M;
  const int n_tendons = manifest.robot.tendon_count;
  data.input_dim = use_hysteresis ? 2 * n_tendons : n_tendons;

  auto add_from = [&](const DatasetManifest& m, bool home_prior_only) {
    if (m.M != manifest.M)
      throw InvalidInput("assemble_training_data: mixed cloud sizes (" +
                         std::to_string(m.M) + " vs " +
                         std::to_string(manifest.M) + ")");
    for (const auto& rec : m.records) {
      if (rec.split == Split::Test) continue;
      if (home_prior_only && !is_home_prior(rec.eta)) continue;
      TrainSample sample;
      sample.input =
          use_hysteresis ? hysteresis_input(rec.eta) : rec.eta.q_current.q;
      sample.truth = read_ply(m.resolve(rec.cloud_path));
      if (rec.split == Split::Train)
        data.train.push_back(std::move(sample));
      else
        data.val.push_back(std::move(sample));
    }
  };
  add_from(manifest, !use_hysteresis);
  for (const auto* extra : extras) add_from(*extra, false);
  return data;
}

namespace detail {

struct RowLoss {
  double loss = 0.0;
  Eigen::RowVectorXd grad;  // d(loss)/d(output row)
};

inline RowLoss row_loss_and_grad(const Eigen::RowVectorXd& out_row,
                                 const PointCloud& truth, LossKind kind,
                                 const LossConfig& loss_cfg) {
  RowLoss rl;
  if (kind == LossKind::Mse) {
    const int dims = static_cast<int>(out_row.size());
    Eigen::RowVectorXd target(dims);
    for (int j = 0; j < dims / 3; ++j) {
      target(3 * j) = truth.points[j].x();
      target(3 * j + 1) = truth.points[j].y();
      target(3 * j + 2) = truth.points[j].z();
    }
    const Eigen::RowVectorXd diff = out_row - target;
    rl.loss = diff.squaredNorm() / dims;
    rl.grad = (2.0 / dims) * diff;
    return rl;
  }
  const PointCloud pred = row_to_cloud(out_row);
  LossConfig cfg = loss_cfg;
  if (kind == LossKind::Chamfer) cfg.lambda = 0.0;
  const LossGradient lg = loss_tendon_gradient(pred, truth, cfg);
  rl.loss = lg.loss;
  rl.grad.resize(out_row.size());
  for (std::size_t j = 0; j < lg.grad.size(); ++j) {
    rl.grad(3 * j) = lg.grad[j].x();
    rl.grad(3 * j + 1) = lg.grad[j].y();
    rl.grad(3 * j + 2) = lg.grad[j].z();
  }
  return rl;
}

inline double row_loss_value(const Eigen::RowVectorXd& out_row,
                             const PointCloud& truth, LossKind kind,
                             const LossConfig& loss_cfg) {
  if (kind == LossKind::Mse) {
    const int dims = static_cast<int>(out_row.size());
    double sum = 0.0;
    for (int j = 0; j < dims / 3; ++j) {
      sum += (out_row(3 * j) - truth.points[j].x()) *
                 (out_row(3 * j) - truth.points[j].x()) +
             (out_row(3 * j + 1) - truth.points[j].y()) *
                 (out_row(3 * j + 1) - truth.points[j].y()) +
             (out_row(3 * j + 2) - truth.points[j].z()) *
                 (out_row(3 * j + 2) - truth.points[j].z());
    }
    return sum / dims;
  }
  LossConfig cfg = loss_cfg;
  if (kind == LossKind::Chamfer) cfg.lambda = 0.0;
  return loss_tendon(row_to_cloud(out_row), truth, cfg);
}

}  // namespace detail

/// Epoch loop with seeded shuffling, step-decayed Adam, per-epoch
/// validation in inference mode, and early stopping on the validation
/// loss. Returns the weights of the best validation epoch, not the last.
inline void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2)
    throw InvalidInput("TrainConfig: batch_size must be at least 2");
  if (cfg.patience < 1) throw InvalidInput("TrainConfig: patience must be >= 1");
  if (cfg.max_epochs < 1)
    throw InvalidInput("TrainConfig: max_epochs must be >= 1");
  if (cfg.lr_decay_every < 1)
    throw InvalidInput("TrainConfig: lr_decay_every must be >= 1");
  if (cfg.lr < 0.0 || cfg.lr_decay_factor <= 0.0 || cfg.lambda < 0.0)
    throw InvalidInput("TrainConfig: negative rate or loss weight");
  if (cfg.emd_exact_cap < 1 || cfg.emd_iters < 1 || !(cfg.emd_reg_scale > 0.0))
    throw InvalidInput("TrainConfig: bad EMD solver policy");
  if (!(cfg.bn_eps > 0.0) || !(cfg.adam_eps > 0.0))
    throw InvalidInput("TrainConfig: epsilons must be positive");
}

inline std::pair<NetworkWeights, TrainReport> train_on_data(
    const NetworkSpec& spec, const TrainingData& data,
    const TrainConfig& cfg) {
  validate(spec);
  validate(cfg);
  if (data.train.size() < 2)
    throw InvalidInput("train: need at least 2 training samples");
  if (data.val.empty()) throw InvalidInput("train: empty validation split");
  if (data.input_dim != spec.input_dim)
    throw InvalidInput("train: dataset input width " +
                       std::to_string(data.input_dim) +
                       " does not match network input " +
                       std::to_string(spec.input_dim));
  if (data.M != spec.point_count)
    throw InvalidInput("train: dataset cloud size M=" +
                       std::to_string(data.M) +
                       " does not match network output M=" +
                       std::to_string(spec.point_count));

  LossConfig loss_cfg;
  loss_cfg.lambda = cfg.lambda;
  loss_cfg.emd_exact_cap = cfg.emd_exact_cap;
  loss_cfg.approx_reg_scale = cfg.emd_reg_scale;
  loss_cfg.approx_iters = cfg.emd_iters;

  NetworkWeights w = init_xavier(spec, cfg.seed);
  w.bn_eps = cfg.bn_eps;
  w.bn_momentum = cfg.bn_momentum;
  w.training_mode = true;
  AdamState adam = make_adam_state(w);
  AdamConfig adam_cfg{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

  const std::size_t n_train = data.train.size();
  std::vector<std::size_t> order(n_train);
  Rng shuffle_rng(cfg.seed ^ 0x747261696e5f6f6bull);

  TrainReport report;
  NetworkWeights best_weights = w;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int adam_t = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double lr = lr_at_epoch(cfg, epoch);

    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    for (std::size_t i = n_train; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    // Batch boundaries; a trailing single sample joins the previous batch
    // because training-mode batch norm needs at least two rows.
    std::vector<std::size_t> bounds;
    for (std::size_t start = 0; start < n_train;
         start += cfg.batch_size)
      bounds.push_back(start);
    bounds.push_back(n_train);
    if (bounds.size() > 2 && bounds[bounds.size() - 1] -
                                     bounds[bounds.size() - 2] ==
                                 1)
      bounds.erase(bounds.end() - 2);

    double train_loss_sum = 0.0;
    for (std::size_t bi = 0; bi + 1 < bounds.size(); ++bi) {
      const std::size_t lo = bounds[bi], hi = bounds[bi + 1];
      const int B = static_cast<int>(hi - lo);
      Eigen::MatrixXd X(B, spec.input_dim);
      for (int r = 0; r < B; ++r)
        X.row(r) = data.train[order[lo + r]].input.transpose();

      ForwardCache cache;
      const Eigen::MatrixXd out = forward_batch(w, X, &cache);

      // Per-row losses in parallel slots; reduction stays in row order so
      // results are independent of the worker count.
      std::vector<detail::RowLoss> rows(B);
      parallel_for(B, [&](std::size_t r) {
        rows[r] = detail::row_loss_and_grad(
            out.row(static_cast<int>(r)),
            data.train[order[lo + r]].truth, cfg.loss, loss_cfg);
      });
      Eigen::MatrixXd d_out(B, spec.output_dim());
      for (int r = 0; r < B; ++r) {
        train_loss_sum += rows[r].loss;
        d_out.row(r) = rows[r].grad / static_cast<double>(B);
      }

      const NetworkGrads grads = backward_from_cache(w, cache, d_out);
      adam_step(w, grads, adam, ++adam_t, lr, adam_cfg);
    }

    // Validation in inference mode.
    w.training_mode = false;
    std::vector<double> val_losses(data.val.size());
    parallel_for(data.val.size(), [&](std::size_t i) {
      const Eigen::VectorXd out = forward_single_raw(w, data.val[i].input);
      val_losses[i] = detail::row_loss_value(out.transpose(),
                                             data.val[i].truth, cfg.loss,
                                             loss_cfg);
    });
    w.training_mode = true;
    double val_loss = 0.0;
    for (double v : val_losses) val_loss += v;
    val_loss /= static_cast<double>(data.val.size());

    EpochStats stats;
    stats.train_loss = train_loss_sum / static_cast<double>(n_train);
    stats.val_loss = val_loss;
    stats.lr = lr;
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - epoch_start)
                        .count();
    report.epochs.push_back(stats);
    report.stop_epoch = epoch;

    if (val_loss < best_val) {
      best_val = val_loss;
      report.best_epoch = epoch;
      best_weights = w;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }

  report.best_val_loss = best_val;
  best_weights.training_mode = false;
  return {std::move(best_weights), std::move(report)};
}

/// Full model: consumes the (prior, current) configuration pair.
inline std::pair<NetworkWeights, TrainReport> train(
    const NetworkSpec& spec, const DatasetManifest& manifest,
    const TrainConfig& cfg,
    const std::vector<const DatasetManifest*>& extras = {}) {
  if (manifest.M != spec.point_count)
    throw InvalidInput("train: dataset M=" + std::to_string(manifest.M) +
                       " does not match network M=" +
                       std::to_string(spec.point_count));
  if (spec.input_dim != 2 * manifest.robot.tendon_count)
    throw InvalidInput("train: network input width must be twice the tendon "
                       "count");
  return train_on_data(spec, assemble_training_data(manifest, true, extras),
                       cfg);
}

/// Ablation without hysteresis awareness: same architecture, input narrowed
/// to the current configuration, trained on the home-prior subset plus any
/// trajectory augmentation.
inline std::pair<NetworkWeights, TrainReport> train_no_hysteresis(
    const NetworkSpec& spec, const DatasetManifest& manifest,
    const TrainConfig& cfg,
    const std::vector<const DatasetManifest*>& extras = {}) {
  if (manifest.M != spec.point_count)
    throw InvalidInput("train: dataset M=" + std::to_string(manifest.M) +
                       " does not match network M=" +
                       std::to_string(spec.point_count));
  if (spec.input_dim != manifest.robot.tendon_count)
    throw InvalidInput(
        "train_no_hysteresis: network input width must equal the tendon "
        "count");
  return train_on_data(spec, assemble_training_data(manifest, false, extras),
                       cfg);
}

inline void write_train_report(const std::string& path,
                               const TrainReport& report) {
  nlohmann::json j;
  j["best_epoch"] = report.best_epoch;
  j["best_val_loss"] = report.best_val_loss;
  j["stop_epoch"] = report.stop_epoch;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : report.epochs)
    j["epochs"].push_back({{"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"lr", e.lr},
                           {"seconds", e.seconds}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path, "write failure");
}

}  // namespace tdcr
