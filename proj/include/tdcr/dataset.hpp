#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdcr/errors.hpp"
#include "tdcr/json_params.hpp"
#include "tdcr/parallel.hpp"
#include "tdcr/ply_io.hpp"
#include "tdcr/random.hpp"
#include "tdcr/robot_model.hpp"

namespace tdcr {

enum class Split { Train, Val, Test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

inline Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw InvalidInput("unknown split label: " + name);
}

struct DatasetRecord {
  std::int64_t id = 0;
  HysteresisConfig eta;
  std::string cloud_path;  // relative to the manifest directory
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<DatasetRecord> records;
  RobotParams robot;
  HysteresisParams hysteresis;
  int M = 512;
  std::uint64_t seed = 0;
  int traj_len = 0;  // >0 when records form chained trajectories
  std::string root;  // directory holding manifest.jsonl and clouds/

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.split == s ? 1 : 0;
    return n;
  }
  std::string resolve(const std::string& rel) const {
    return (std::filesystem::path(root) / rel).string();
  }
};

/// Per-tendon displacements discretized to `levels` values over [0, q_max],
/// filtered to the mechanically sensible combinations: at most two straight
/// tendons pulled at once, the helical tendon only pulled alone, and the
/// all-zero (home) configuration excluded. Lexicographic order.
inline std::vector<Config> generate_nominal_grid(const RobotParams& p,
                                                 int levels) {
  validate(p);
  if (levels < 2) throw InvalidInput("generate_nominal_grid: levels must be >= 2");
  std::vector<double> values(levels);
  for (int i = 0; i < levels; ++i)
    values[i] = p.q_max * static_cast<double>(i) / (levels - 1);

  std::vector<Config> out;
  for (int i1 = 0; i1 < levels; ++i1)
    for (int i2 = 0; i2 < levels; ++i2)
      for (int i3 = 0; i3 < levels; ++i3)
        for (int ih = 0; ih < levels; ++ih) {
          const int straight_active = (i1 > 0) + (i2 > 0) + (i3 > 0);
          if (straight_active == 3) continue;
          if (ih > 0 && straight_active > 0) continue;
          if (ih == 0 && straight_active == 0) continue;
          Config c = zero_config(p);
          c.q << values[i1], values[i2], values[i3], values[ih];
          out.push_back(std::move(c));
        }
  return out;
}

/// One hysteresis configuration per nominal entry, with the home (all-zero)
/// configuration as the prior. Order preserved.
inline std::vector<HysteresisConfig> build_home_prior_set(
    const RobotParams& p, const std::vector<Config>& nominal) {
  if (nominal.empty())
    throw InvalidInput("build_home_prior_set: empty nominal set");
  std::vector<HysteresisConfig> out;
  out.reserve(nominal.size());
  const Config home = zero_config(p);
  for (const auto& q : nominal) out.push_back({home, q});
  return out;
}

/// `copies` hysteresis configurations per nominal entry whose priors are
/// drawn uniformly (seeded) from the other nominal configurations.
inline std::vector<HysteresisConfig> augment_random_prior(
    const std::vector<Config>& nominal, int copies, std::uint64_t seed) {
  if (copies < 1) throw InvalidInput("augment_random_prior: copies must be >= 1");
  if (nominal.size() < 2)
    throw InvalidInput("augment_random_prior: need at least 2 nominal configs");
  Rng rng(seed);
  std::vector<HysteresisConfig> out;
  out.reserve(nominal.size() * copies);
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    for (int c = 0; c < copies; ++c) {
      std::size_t j = rng.uniform_index(nominal.size() - 1);
      if (j >= i) ++j;  // skip the current configuration
      out.push_back({nominal[j], nominal[i]});
    }
  }
  return out;
}

/// Random trajectories of `traj_len` distinct nominal configurations each.
/// Trajectory records chain: the home configuration precedes the first
/// step, then each step's current configuration is the next step's prior.
inline std::vector<std::vector<HysteresisConfig>> generate_trajectories(
    const RobotParams& p, const std::vector<Config>& nominal, int n_traj,
    int traj_len, std::uint64_t seed) {
  if (traj_len < 2)
    throw InvalidInput("generate_trajectories: traj_len must be >= 2");
  if (nominal.size() < static_cast<std::size_t>(traj_len))
    throw InvalidInput(
        "generate_trajectories: nominal set smaller than traj_len");
  Rng rng(seed);
  const Config home = zero_config(p);
  std::vector<std::vector<HysteresisConfig>> out;
  out.reserve(n_traj);
  std::vector<std::size_t> order(nominal.size());
  for (int t = 0; t < n_traj; ++t) {
    // Partial Fisher-Yates: the first traj_len entries are distinct draws.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<HysteresisConfig> traj;
    traj.reserve(traj_len);
    const Config* prev = &home;
    for (int k = 0; k < traj_len; ++k) {
      const std::size_t pick = k + rng.uniform_index(order.size() - k);
      std::swap(order[k], order[pick]);
      const Config& cur = nominal[order[k]];
      traj.push_back({*prev, cur});
      prev = &nominal[order[k]];
    }
    out.push_back(std::move(traj));
  }
  return out;
}

enum class SplitPolicy {
  Standard,  // 50 test (seeded shuffle), then 70/30 train/val of the rest
  AllTrain,
  AllTest,
};

struct MaterializeOptions {
  double noise_sigma = 0.0005;
  bool overwrite = false;
  SplitPolicy policy = SplitPolicy::Standard;
  int traj_len = 0;
  SimOptions sim;
};

namespace detail {

inline std::string cloud_rel_path(std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clouds/%06lld.ply",
                static_cast<long long>(id));
  return buf;
}

inline nlohmann::json config_to_json(const Config& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < c.q.size(); ++i) arr.push_back(c.q(i));
  return arr;
}

inline Config config_from_json(const nlohmann::json& arr) {
  Config c;
  c.q.resize(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) c.q(i) = arr[i].get<double>();
  return c;
}

}  // namespace detail

/// Generates one ground-truth cloud per hysteresis configuration (cloud
/// seeds derive as dataset seed + record id), writes ASCII PLYs plus a
/// JSON-lines manifest, and assigns splits per the policy. Refuses to
/// clobber an existing dataset unless opts.overwrite is set.
inline DatasetManifest materialize(const std::vector<HysteresisConfig>& etas,
                                   const RobotParams& robot,
                                   const HysteresisParams& hysteresis, int M,
                                   std::uint64_t seed,
                                   const std::string& out_dir,
                                   const MaterializeOptions& opts = {}) {
  if (etas.empty()) throw InvalidInput("materialize: no configurations");
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  const fs::path manifest_path = root / "manifest.jsonl";
  if (fs::exists(manifest_path) && !opts.overwrite)
    throw IoError(manifest_path.string(),
                  "dataset already exists (pass overwrite to replace)");
  std::error_code ec;
  fs::create_directories(root / "clouds", ec);
  if (ec) throw IoError((root / "clouds").string(), ec.message());

  const std::size_t n = etas.size();

  // Split assignment.
  std::vector<Split> splits(n, Split::Train);
  if (opts.policy == SplitPolicy::AllTest) {
    std::fill(splits.begin(), splits.end(), Split::Test);
  } else if (opts.policy == SplitPolicy::Standard) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(seed ^ 0x5b1cd00dfeedbeefull);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    const std::size_t n_test = std::min<std::size_t>(50, n);
    const std::size_t remainder = n - n_test;
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(0.7 * remainder));
    for (std::size_t k = 0; k < n; ++k) {
      if (k < n_test)
        splits[order[k]] = Split::Test;
      else if (k < n_test + n_train)
        splits[order[k]] = Split::Train;
      else
        splits[order[k]] = Split::Val;
    }
  }

  // Generate clouds into slots (bitwise independent of worker count), then
  // write everything in id order from this thread.
  std::vector<PointCloud> clouds(n);
  parallel_for(n, [&](std::size_t i) {
    clouds[i] = ground_truth_cloud(robot, hysteresis, etas[i], M,
                                   opts.noise_sigma, seed + i, opts.sim);
  });

  DatasetManifest manifest;
  manifest.robot = robot;
  manifest.hysteresis = hysteresis;
  manifest.M = M;
  manifest.seed = seed;
  manifest.traj_len = opts.traj_len;
  manifest.root = root.string();
  manifest.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord rec;
    rec.id = static_cast<std::int64_t>(i);
    rec.eta = etas[i];
    rec.cloud_path = detail::cloud_rel_path(rec.id);
    rec.split = splits[i];
    write_ply(manifest.resolve(rec.cloud_path), clouds[i]);
    manifest.records.push_back(std::move(rec));
  }

  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError(manifest_path.string(), "cannot open for writing");
  nlohmann::json header;
  header["robot"] = robot;
  header["hysteresis"] = hysteresis;
  header["M"] = M;
  header["seed"] = seed;
  header["traj_len"] = manifest.traj_len;
  header["counts"] = {{"train", manifest.count(Split::Train)},
                      {"val", manifest.count(Split::Val)},
                      {"test", manifest.count(Split::Test)}};
  out << header.dump() << "\n";
  for (const auto& rec : manifest.records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["q_prior"] = detail::config_to_json(rec.eta.q_prior);
    j["q_current"] = detail::config_to_json(rec.eta.q_current);
    j["cloud"] = rec.cloud_path;
    j["split"] = split_name(rec.split);
    out << j.dump() << "\n";
  }
  if (!out) throw IoError(manifest_path.string(), "write failure");
  return manifest;
}

/// Parses and validates a dataset directory. Parse failures report the
/// offending line; invariant violations (missing or wrong-size cloud,
/// duplicate id) report the offending record.
inline DatasetManifest load_manifest(const std::string& dir_or_file) {
  namespace fs = std::filesystem;
  fs::path path(dir_or_file);
  if (fs::is_directory(path)) path /= "manifest.jsonl";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");

  DatasetManifest manifest;
  manifest.root = path.parent_path().string();

  std::string line;
  int lineno = 0;
  auto parse_line = [&](const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string(), "line " + std::to_string(lineno) +
                                       ": JSON parse error: " + e.what());
    }
  };

  if (!std::getline(in, line))
    throw IoError(path.string(), "empty manifest");
  ++lineno;
  const nlohmann::json header = parse_line(line);
  try {
    manifest.robot = header.at("robot").get<RobotParams>();
    manifest.hysteresis = header.at("hysteresis").get<HysteresisParams>();
    manifest.M = header.at("M").get<int>();
    manifest.seed = header.at("seed").get<std::uint64_t>();
    manifest.traj_len = header.value("traj_len", 0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string(),
                  "line 1: malformed header: " + std::string(e.what()));
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json j = parse_line(line);
    DatasetRecord rec;
    try {
      rec.id = j.at("id").get<std::int64_t>();
      rec.eta.q_prior = detail::config_from_json(j.at("q_prior"));
      rec.eta.q_current = detail::config_from_json(j.at("q_current"));
      rec.cloud_path = j.at("cloud").get<std::string>();
      rec.split = split_from_name(j.at("split").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string(), "line " + std::to_string(lineno) +
                                       ": malformed record: " + e.what());
    } catch (const InvalidInput& e) {
      throw IoError(path.string(), "line " + std::to_string(lineno) + ": " +
                                       e.what());
    }
    manifest.records.push_back(std::move(rec));
  }

  // Invariants: unique ids, every cloud present with exactly M points.
  std::vector<std::int64_t> ids;
  ids.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw InvalidInput("manifest: duplicate record id");
  if (const auto& counts = header.find("counts"); counts != header.end()) {
    const std::size_t want_train = counts->value("train", 0);
    const std::size_t want_val = counts->value("val", 0);
    const std::size_t want_test = counts->value("test", 0);
    if (want_train != manifest.count(Split::Train) ||
        want_val != manifest.count(Split::Val) ||
        want_test != manifest.count(Split::Test))
      throw InvalidInput("manifest: header counts disagree with records");
  }
  for (const auto& rec : manifest.records) {
    PointCloud cloud;
    try {
      cloud = read_ply(manifest.resolve(rec.cloud_path));
    } catch (const IoError& e) {
      throw InvalidInput("record " + std::to_string(rec.id) +
                         ": cloud unreadable: " + e.what());
    }
    if (static_cast<int>(cloud.size()) != manifest.M)
      throw InvalidInput("record " + std::to_string(rec.id) + ": cloud has " +
                         std::to_string(cloud.size()) + " points, expected " +
                         std::to_string(manifest.M));
  }
  return manifest;
}

}  // namespace tdcr
