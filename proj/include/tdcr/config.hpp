#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdcr/errors.hpp"
#include "tdcr/json_params.hpp"
#include "tdcr/training.hpp"

namespace tdcr {

struct DatasetConfig {
  int levels = 6;          // grid resolution per tendon
  int prior_copies = 2;    // random-prior repetitions per nominal config
  int M = 512;             // points per stored cloud
  double noise_sigma = 0.0005;
  int segments = 256;      // backbone discretization
  int n_raw = 4096;        // dense surface samples before downsampling
  int traj_count = 240;    // trajectories in a traj-train dataset
  int eval_traj_count = 6; // trajectories in a traj-eval dataset
  int traj_len = 5;
};

struct EvalConfig {
  int tip_k = 16;
  std::uint64_t seed = 0;
};

/// One JSON document with sections robot / hysteresis / dataset / network /
/// training / eval; absent sections and fields keep their defaults.
struct ExperimentConfig {
  RobotParams robot;
  HysteresisParams hysteresis;
  DatasetConfig dataset;
  std::vector<int> hidden_dims = {128, 256, 512, 1024};
  TrainConfig training;
  EvalConfig eval;

  SimOptions sim_options() const {
    SimOptions opt;
    opt.segments = dataset.segments;
    opt.n_raw = dataset.n_raw;
    return opt;
  }
};

inline void to_json(nlohmann::json& j, const DatasetConfig& d) {
  j = nlohmann::json{{"levels", d.levels},
                     {"prior_copies", d.prior_copies},
                     {"M", d.M},
                     {"noise_sigma", d.noise_sigma},
                     {"segments", d.segments},
                     {"n_raw", d.n_raw},
                     {"traj_count", d.traj_count},
                     {"eval_traj_count", d.eval_traj_count},
                     {"traj_len", d.traj_len}};
}

inline void from_json(const nlohmann::json& j, DatasetConfig& d) {
  d = DatasetConfig{};
  if (j.contains("levels")) j.at("levels").get_to(d.levels);
  if (j.contains("prior_copies")) j.at("prior_copies").get_to(d.prior_copies);
  if (j.contains("M")) j.at("M").get_to(d.M);
  if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(d.noise_sigma);
  if (j.contains("segments")) j.at("segments").get_to(d.segments);
  if (j.contains("n_raw")) j.at("n_raw").get_to(d.n_raw);
  if (j.contains("traj_count")) j.at("traj_count").get_to(d.traj_count);
  if (j.contains("eval_traj_count"))
    j.at("eval_traj_count").get_to(d.eval_traj_count);
  if (j.contains("traj_len")) j.at("traj_len").get_to(d.traj_len);
}

inline void to_json(nlohmann::json& j, const TrainConfig& t) {
  j = nlohmann::json{{"lr", t.lr},
                     {"lr_decay_factor", t.lr_decay_factor},
                     {"lr_decay_every", t.lr_decay_every},
                     {"batch_size", t.batch_size},
                     {"patience", t.patience},
                     {"max_epochs", t.max_epochs},
                     {"lambda", t.lambda},
                     {"seed", t.seed},
                     {"adam_beta1", t.adam_beta1},
                     {"adam_beta2", t.adam_beta2},
                     {"adam_eps", t.adam_eps},
                     {"bn_momentum", t.bn_momentum},
                     {"bn_eps", t.bn_eps},
                     {"loss", loss_kind_name(t.loss)},
                     {"emd_exact_cap", t.emd_exact_cap},
                     {"emd_reg_scale", t.emd_reg_scale},
                     {"emd_iters", t.emd_iters}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& t) {
  t = TrainConfig{};
  if (j.contains("lr")) j.at("lr").get_to(t.lr);
  if (j.contains("lr_decay_factor"))
    j.at("lr_decay_factor").get_to(t.lr_decay_factor);
  if (j.contains("lr_decay_every"))
    j.at("lr_decay_every").get_to(t.lr_decay_every);
  if (j.contains("batch_size")) j.at("batch_size").get_to(t.batch_size);
  if (j.contains("patience")) j.at("patience").get_to(t.patience);
  if (j.contains("max_epochs")) j.at("max_epochs").get_to(t.max_epochs);
  if (j.contains("lambda")) j.at("lambda").get_to(t.lambda);
  if (j.contains("seed")) j.at("seed").get_to(t.seed);
  if (j.contains("adam_beta1")) j.at("adam_beta1").get_to(t.adam_beta1);
  if (j.contains("adam_beta2")) j.at("adam_beta2").get_to(t.adam_beta2);
  if (j.contains("adam_eps")) j.at("adam_eps").get_to(t.adam_eps);
  if (j.contains("bn_momentum")) j.at("bn_momentum").get_to(t.bn_momentum);
  if (j.contains("bn_eps")) j.at("bn_eps").get_to(t.bn_eps);
  if (j.contains("loss")) t.loss = loss_kind_from_name(j.at("loss"));
  if (j.contains("emd_exact_cap"))
    j.at("emd_exact_cap").get_to(t.emd_exact_cap);
  if (j.contains("emd_reg_scale"))
    j.at("emd_reg_scale").get_to(t.emd_reg_scale);
  if (j.contains("emd_iters")) j.at("emd_iters").get_to(t.emd_iters);
}

inline void to_json(nlohmann::json& j, const EvalConfig& e) {
  j = nlohmann::json{{"tip_k", e.tip_k}, {"seed", e.seed}};
}

inline void from_json(const nlohmann::json& j, EvalConfig& e) {
  e = EvalConfig{};
  if (j.contains("tip_k")) j.at("tip_k").get_to(e.tip_k);
  if (j.contains("seed")) j.at("seed").get_to(e.seed);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"robot", c.robot},
                     {"hysteresis", c.hysteresis},
                     {"dataset", c.dataset},
                     {"network", {{"hidden_dims", c.hidden_dims}}},
                     {"training", c.training},
                     {"eval", c.eval}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("robot")) j.at("robot").get_to(c.robot);
  if (j.contains("hysteresis")) j.at("hysteresis").get_to(c.hysteresis);
  if (j.contains("dataset")) j.at("dataset").get_to(c.dataset);
  if (j.contains("network") && j.at("network").contains("hidden_dims"))
    j.at("network").at("hidden_dims").get_to(c.hidden_dims);
  if (j.contains("training")) j.at("training").get_to(c.training);
  if (j.contains("eval")) j.at("eval").get_to(c.eval);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("JSON parse error: ") + e.what());
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("bad config: ") + e.what());
  }
}

inline void save_experiment_config(const std::string& path,
                                   const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << nlohmann::json(config).dump(2) << "\n";
  if (!out) throw IoError(path, "write failure");
}

}  // namespace tdcr
