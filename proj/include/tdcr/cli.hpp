#pragma once

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdcr/calibration.hpp"
#include "tdcr/config.hpp"
#include "tdcr/dataset.hpp"
#include "tdcr/evaluation.hpp"
#include "tdcr/training.hpp"

namespace tdcr {

namespace cli_detail {

inline ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_experiment_config(path);
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, ec.message());
}

struct LoadedModels {
  std::vector<std::unique_ptr<NetworkWeights>> storage;
  std::vector<EvalModel> models;
};

/// Parses repeated "tag=path" model arguments; the input width decides
/// whether a decoder consumes the configuration pair or only the current
/// configuration.
inline LoadedModels load_models(const std::vector<std::string>& specs,
                                bool with_baseline,
                                const RobotParams& baseline_params,
                                const DatasetManifest& manifest) {
  LoadedModels out;
  const int n_tendons = manifest.robot.tendon_count;
  for (const auto& spec : specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw InvalidInput("--model expects tag=path, got: " + spec);
    EvalModel model;
    model.tag = spec.substr(0, eq);
    auto weights = std::make_unique<NetworkWeights>(
        load_weights(spec.substr(eq + 1)));
    if (weights->spec.point_count != manifest.M)
      throw InvalidInput("model '" + model.tag + "' emits " +
                         std::to_string(weights->spec.point_count) +
                         " points but the dataset holds clouds of " +
                         std::to_string(manifest.M));
    if (weights->spec.input_dim == 2 * n_tendons) {
      model.kind = EvalModel::Kind::HysteresisNet;
    } else if (weights->spec.input_dim == n_tendons) {
      model.kind = EvalModel::Kind::CurrentOnlyNet;
    } else {
      throw InvalidInput("model '" + model.tag + "' input width " +
                         std::to_string(weights->spec.input_dim) +
                         " matches neither the configuration pair nor a "
                         "single configuration");
    }
    model.weights = weights.get();
    out.storage.push_back(std::move(weights));
    out.models.push_back(std::move(model));
  }
  if (with_baseline) {
    EvalModel model;
    model.tag = "baseline";
    model.kind = EvalModel::Kind::Baseline;
    model.baseline_params = baseline_params;
    out.models.push_back(std::move(model));
  }
  if (out.models.empty()) throw InvalidInput("no models to evaluate");
  return out;
}

inline RobotParams baseline_params_from(const std::string& params_path,
                                        const RobotParams& true_robot) {
  if (params_path.empty()) return perturbed_baseline_params(true_robot);
  std::ifstream in(params_path, std::ios::binary);
  if (!in) throw IoError(params_path, "cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(params_path, std::string("JSON parse error: ") + e.what());
  }
  return j.get<RobotParams>();
}

}  // namespace cli_detail

/// Experiment harness entry point. Exit codes: 0 success, 1 usage error,
/// 2 data or validation error.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Point-cloud shape model laboratory for tendon-driven "
               "continuum robots"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "Experiment config JSON")
      ->expected(1);
  app.add_option("--out", out_path, "Output file or directory")->expected(1);
  app.add_option("--seed", seed, "Seed for the invoked command")
      ->expected(1)
      ->each([&](const std::string&) { seed_given = true; });
  app.fallthrough(true);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a dataset");
  std::string gen_kind = "main";
  bool gen_overwrite = false;
  gen->add_option("--kind", gen_kind,
                  "Dataset kind: main, traj-train, or traj-eval")
      ->check(CLI::IsMember({"main", "traj-train", "traj-eval"}));
  gen->add_flag("--overwrite", gen_overwrite,
                "Replace an existing dataset directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a decoder");
  std::string train_data, train_report_path, train_loss;
  std::vector<std::string> train_extra_data;
  bool no_hysteresis = false;
  train_cmd->add_option("--data", train_data, "Dataset directory")
      ->required();
  train_cmd->add_option("--traj-data", train_extra_data,
                        "Trajectory dataset directories mixed into training");
  train_cmd->add_option("--loss", train_loss,
                        "Loss function: mse, chamfer, or chamfer-emd")
      ->check(CLI::IsMember({"mse", "chamfer", "chamfer-emd"}));
  train_cmd->add_flag("--no-hysteresis", no_hysteresis,
                      "Consume only the current configuration");
  train_cmd->add_option("--report", train_report_path,
                        "Write the per-epoch training report JSON here");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate models on the test split");
  std::string eval_data, eval_baseline_params;
  std::vector<std::string> eval_models;
  bool eval_baseline = false;
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--model", eval_models,
                       "Model as tag=weights-path (repeatable)");
  eval_cmd->add_flag("--baseline", eval_baseline,
                     "Include the analytic baseline");
  eval_cmd->add_option("--baseline-params", eval_baseline_params,
                       "Baseline robot parameters JSON (default: perturbed "
                       "true parameters)");

  // traj
  auto* traj_cmd =
      app.add_subcommand("traj", "Evaluate models on chained trajectories");
  std::string traj_data, traj_baseline_params;
  std::vector<std::string> traj_models;
  bool traj_baseline = false;
  traj_cmd->add_option("--data", traj_data, "Trajectory dataset directory")
      ->required();
  traj_cmd->add_option("--model", traj_models,
                       "Model as tag=weights-path (repeatable)");
  traj_cmd->add_flag("--baseline", traj_baseline,
                     "Include the analytic baseline");
  traj_cmd->add_option("--baseline-params", traj_baseline_params,
                       "Baseline robot parameters JSON");

  // quantify
  auto* quant_cmd = app.add_subcommand(
      "quantify", "Measure prior-dependence of the simulated robot");

  // calibrate-baseline
  auto* calib_cmd = app.add_subcommand(
      "calibrate-baseline", "Fit baseline parameters to dataset clouds");
  std::string calib_data;
  int calib_pairs = 30;
  int calib_max_evals = 400;
  calib_cmd->add_option("--data", calib_data, "Dataset directory")
      ->required();
  calib_cmd->add_option("--pairs", calib_pairs,
                        "Home-prior training pairs to fit against");
  calib_cmd->add_option("--max-evals", calib_max_evals,
                        "Objective evaluation budget");

  // bench
  auto* bench_cmd =
      app.add_subcommand("bench", "Time decoder inference vs the simulator");
  std::string bench_weights;
  int bench_runs = 100;
  bench_cmd->add_option("--weights", bench_weights,
                        "Decoder weights (default: a fresh initialization)");
  bench_cmd->add_option("--runs", bench_runs, "Timed repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n"
              << "run with --help for usage\n";
    return 1;
  }

  try {
    const ExperimentConfig cfg =
        cli_detail::load_config_or_default(config_path);

    if (app.got_subcommand(gen)) {
      if (out_path.empty()) throw InvalidInput("gen: --out is required");
      const std::vector<Config> nominal =
          generate_nominal_grid(cfg.robot, cfg.dataset.levels);
      MaterializeOptions opts;
      opts.noise_sigma = cfg.dataset.noise_sigma;
      opts.overwrite = gen_overwrite;
      opts.sim = cfg.sim_options();

      std::vector<HysteresisConfig> etas;
      if (gen_kind == "main") {
        etas = build_home_prior_set(cfg.robot, nominal);
        const auto augmented = augment_random_prior(
            nominal, cfg.dataset.prior_copies, seed);
        etas.insert(etas.end(), augmented.begin(), augmented.end());
        opts.policy = SplitPolicy::Standard;
      } else {
        const bool is_eval = gen_kind == "traj-eval";
        // Evaluation trajectories come from a separate stream, so the same
        // --seed never reuses the training trajectories.
        const std::uint64_t traj_seed =
            is_eval ? (seed ^ 0x6576616c2d736574ull) : seed;
        const auto trajectories = generate_trajectories(
            cfg.robot, nominal,
            is_eval ? cfg.dataset.eval_traj_count : cfg.dataset.traj_count,
            cfg.dataset.traj_len, traj_seed);
        for (const auto& traj : trajectories)
          etas.insert(etas.end(), traj.begin(), traj.end());
        opts.policy = is_eval ? SplitPolicy::AllTest : SplitPolicy::AllTrain;
        opts.traj_len = cfg.dataset.traj_len;
      }
      const DatasetManifest manifest =
          materialize(etas, cfg.robot, cfg.hysteresis, cfg.dataset.M, seed,
                      out_path, opts);
      std::cout << "wrote " << manifest.records.size() << " records to "
                << out_path << " (train " << manifest.count(Split::Train)
                << ", val " << manifest.count(Split::Val) << ", test "
                << manifest.count(Split::Test) << ")\n";
      return 0;
    }

    if (app.got_subcommand(train_cmd)) {
      if (out_path.empty()) throw InvalidInput("train: --out is required");
      const DatasetManifest manifest = load_manifest(train_data);
      std::vector<DatasetManifest> extra_storage;
      std::vector<const DatasetManifest*> extras;
      for (const auto& dir : train_extra_data)
        extra_storage.push_back(load_manifest(dir));
      for (const auto& m : extra_storage) extras.push_back(&m);

      TrainConfig tc = cfg.training;
      if (!train_loss.empty()) tc.loss = loss_kind_from_name(train_loss);
      if (seed_given) tc.seed = seed;

      NetworkSpec spec;
      spec.hidden_dims = cfg.hidden_dims;
      spec.point_count = cfg.dataset.M;
      spec.input_dim = no_hysteresis ? manifest.robot.tendon_count
                                     : 2 * manifest.robot.tendon_count;

      auto [weights, report] =
          no_hysteresis ? train_no_hysteresis(spec, manifest, tc, extras)
                        : train(spec, manifest, tc, extras);
      save_weights(weights, out_path);
      if (!train_report_path.empty())
        write_train_report(train_report_path, report);
      std::cout << "trained " << report.epochs.size() << " epochs, best val "
                << report.best_val_loss << " at epoch " << report.best_epoch
                << "; weights -> " << out_path << "\n";
      return 0;
    }

    if (app.got_subcommand(eval_cmd) || app.got_subcommand(traj_cmd)) {
      const bool is_traj = app.got_subcommand(traj_cmd);
      if (out_path.empty()) throw InvalidInput("eval: --out is required");
      const DatasetManifest manifest =
          load_manifest(is_traj ? traj_data : eval_data);
      const RobotParams baseline_params = cli_detail::baseline_params_from(
          is_traj ? traj_baseline_params : eval_baseline_params,
          manifest.robot);
      cli_detail::LoadedModels loaded = cli_detail::load_models(
          is_traj ? traj_models : eval_models,
          is_traj ? traj_baseline : eval_baseline, baseline_params, manifest);

      EvalOptions opts;
      opts.tip_k = cfg.eval.tip_k;
      opts.seed = seed_given ? seed : cfg.eval.seed;
      opts.sim = cfg.sim_options();

      const EvalOutput result =
          is_traj ? run_trajectory_eval(manifest, loaded.models, opts)
                  : run_comparison(manifest, loaded.models, opts);
      cli_detail::ensure_dir(out_path);
      const auto dir = std::filesystem::path(out_path);
      write_metrics_csv((dir / "metrics.csv").string(), result.rows, is_traj);
      write_summary_json((dir / "summary.json").string(), result.summary);
      for (const auto& agg : result.summary.models)
        std::cout << agg.model << ": chamfer " << agg.chamfer_mean << " +/- "
                  << agg.chamfer_std << " m^2, tip " << agg.tip_mean
                  << " +/- " << agg.tip_std << " m\n";
      return 0;
    }

    if (app.got_subcommand(quant_cmd)) {
      if (out_path.empty()) throw InvalidInput("quantify: --out is required");
      const std::vector<Config> nominal =
          generate_nominal_grid(cfg.robot, cfg.dataset.levels);
      const QuantifyReport report = quantify_hysteresis(
          cfg.robot, cfg.hysteresis, nominal, cfg.dataset.M,
          cfg.dataset.noise_sigma, seed, cfg.sim_options());
      cli_detail::ensure_dir(out_path);
      const auto dir = std::filesystem::path(out_path);
      write_quantify_report((dir / "quantify.csv").string(),
                            (dir / "quantify.json").string(), report);
      std::cout << "tip separation " << report.tip_mean << " +/- "
                << report.tip_std << " m ("
                << 100.0 * report.tip_mean_fraction
                << "% of backbone length) over " << report.rows.size()
                << " configurations\n";
      return 0;
    }

    if (app.got_subcommand(calib_cmd)) {
      if (out_path.empty())
        throw InvalidInput("calibrate-baseline: --out is required");
      const DatasetManifest manifest = load_manifest(calib_data);
      std::vector<std::pair<Config, PointCloud>> pairs;
      for (const auto& rec : manifest.records) {
        if (rec.split != Split::Train || !is_home_prior(rec.eta)) continue;
        pairs.emplace_back(rec.eta.q_current,
                           read_ply(manifest.resolve(rec.cloud_path)));
        if (static_cast<int>(pairs.size()) >= calib_pairs) break;
      }
      const RobotParams p_init = perturbed_baseline_params(manifest.robot);
      const RobotParams fitted = calibrate_baseline(
          p_init, pairs, calib_max_evals, cfg.sim_options());
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw IoError(out_path, "cannot open for writing");
      out << nlohmann::json(fitted).dump(2) << "\n";
      std::cout << "calibrated gain " << fitted.curvature_gain
                << ", radial offset " << fitted.tendon_radial_offset
                << ", helical phase " << fitted.helical_phase << " -> "
                << out_path << "\n";
      return 0;
    }

    if (app.got_subcommand(bench_cmd)) {
      if (out_path.empty()) throw InvalidInput("bench: --out is required");
      NetworkSpec spec;
      spec.hidden_dims = cfg.hidden_dims;
      spec.point_count = cfg.dataset.M;
      spec.input_dim = 2 * cfg.robot.tendon_count;
      NetworkWeights weights = bench_weights.empty()
                                   ? init_xavier(spec, seed)
                                   : load_weights(bench_weights);
      const TimingReport report =
          bench_timing(weights, perturbed_baseline_params(cfg.robot),
                       cfg.dataset.M, bench_runs, cfg.sim_options());
      cli_detail::ensure_dir(out_path);
      const auto dir = std::filesystem::path(out_path);
      write_timing_report((dir / "bench.csv").string(),
                          (dir / "bench.json").string(), report);
      std::cout << "net " << report.net_mean << " ms, baseline "
                << report.baseline_mean << " ms, speedup " << report.speedup
                << "x over " << bench_runs << " runs\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("tdcr");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tdcr
