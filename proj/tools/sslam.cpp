// sslam: command line driver for the DLSC-QBS SLAM pipeline.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sslam/dataset.hpp"
#include "sslam/pipeline.hpp"
#include "sslam/synthstream.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitDataset = 2;
constexpr int kExitDivergence = 3;

/// Every config key as an optional flag ("eta_c" becomes "--eta-c").
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;
  bool no_gating = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "Flat key = value config file; flags override it")
        ->check(CLI::ExistingFile);
    for (const auto& key : sslam::config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option("--" + flag, values[key], "Config key " + key);
    }
    app.add_flag("--no-gating", no_gating, "Ablation: update the dictionary on every frame");
  }

  sslam::RunConfig build(const CLI::App& app) const {
    sslam::RunConfig config;
    if (config_file) sslam::apply_config_file(config, *config_file);
    for (const auto& [key, value] : values) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app.count("--" + flag) > 0) sslam::apply_config_value(config, key, value);
    }
    if (no_gating) config.gating = false;
    config.validate();
    return config;
  }
};

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string("missing ") + what);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_mu_list(const std::string& list, const std::string& range) {
  std::vector<double> mus;
  if (!range.empty()) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (start <= range.size()) {
      const auto colon = range.find(':', start);
      parts.push_back(std::stod(range.substr(start, colon - start)));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw std::invalid_argument("--mu-range must be min:max:step");
    mus = sslam::GridRange{parts[0], parts[1], parts[2]}.values();
  }
  std::size_t start = 0;
  while (start < list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    if (comma > start) mus.push_back(std::stod(list.substr(start, comma - start)));
    start = comma + 1;
  }
  if (mus.empty()) throw std::invalid_argument("give --mu-values or --mu-range");
  return mus;
}

int cmd_gen(const std::string& scenario, const fs::path& spec, std::uint64_t seed, bool seed_given,
            const fs::path& out) {
  require_path(out, "--out");
  sslam::ScenarioFile file;
  file.scenario = scenario;
  if (!spec.empty()) {
    file = sslam::load_scenario_file(spec);
    if (seed_given) file.options.seed = seed;
  } else {
    file.options.seed = seed;
  }
  sslam::Dataset ds = sslam::to_dataset(sslam::make_scenario(file.scenario, file.options));
  ds.meta.spec = file.entries;
  sslam::write_dataset(ds, out);
  std::cout << "wrote " << ds.frames.size() << " frames of " << ds.meta.scenario << " to " << out.string()
            << "\n";
  return 0;
}

int cmd_run(const sslam::RunConfig& config) {
  require_path(config.dataset, "--dataset");
  require_path(config.out, "--out");
  const auto artifacts = sslam::run_slam(config);
  sslam::write_run_artifacts(artifacts, config.out);
  std::cout << sslam::metrics_json(artifacts.metrics);
  return 0;
}

int cmd_replay(const sslam::RunConfig& config, const fs::path& dictionary) {
  require_path(config.dataset, "--dataset");
  require_path(config.out, "--out");
  require_path(dictionary, "--dictionary");
  const auto ds = sslam::load_dataset(config.dataset, config.color);
  const auto dict = sslam::load_dictionary(dictionary);
  const auto errors = sslam::replay_errors(ds.frames, dict, config.dlsc_for(dict.n_inputs()));
  fs::create_directories(config.out);
  sslam::write_replay_csv(config.out / "replay.csv", errors);
  double mean = 0.0;
  for (double e : errors) mean += e;
  std::cout << "mean replay error " << mean / static_cast<double>(errors.size()) << "\n";
  return 0;
}

int cmd_eval(const sslam::RunConfig& config, const fs::path& trajectory, const fs::path& ground_truth,
             const fs::path& map) {
  require_path(trajectory, "--trajectory");
  require_path(ground_truth, "--ground-truth");
  require_path(config.out, "--out");
  const auto traj = sslam::read_trajectory_csv(trajectory);
  const auto gt = sslam::read_trajectory_csv(ground_truth);
  std::vector<sslam::MapPoint> points;
  if (!map.empty()) {
    points = sslam::read_map_csv(map);
  } else {
    for (const auto& p : traj.points) points.push_back({p.x, p.y});
  }
  auto metrics = sslam::evaluate_trajectory(traj, points, gt, config.grid, config.grid_refine,
                                            config.mapping_normalization);
  metrics.mu = config.matcher.mu;
  metrics.params_hash = config.params_hash();
  fs::create_directories(config.out);
  write_text(config.out / "metrics.json", sslam::metrics_json(metrics));
  std::cout << sslam::metrics_json(metrics);
  return 0;
}

int cmd_sweep(sslam::RunConfig config, const std::vector<double>& mus) {
  require_path(config.dataset, "--dataset");
  require_path(config.out, "--out");
  const auto ds = sslam::load_dataset(config.dataset, config.color);
  auto encoding = sslam::run_encoder(ds.frames, config);
  const auto sweep = sslam::sweep_mu(config, ds, encoding, mus);
  config.matcher.mu = sweep.best_mu;
  auto mapping = sslam::run_mapping(ds, encoding.codes, config.matcher, config.backend);
  auto metrics = sslam::evaluate_mapping(mapping, ds.ground_truth, config, ds.meta.scenario);
  const sslam::RunArtifacts best{std::move(encoding), std::move(mapping), std::move(metrics)};
  sslam::write_run_artifacts(best, config.out);
  write_text(config.out / "sweep.json", sslam::sweep_json(sweep));
  std::cout << sslam::sweep_json(sweep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual dictionary learning SLAM with surprise-gated updates"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic warehouse dataset");
  std::string scenario = "flight1";
  fs::path spec_file;
  fs::path gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("--scenario", scenario, "flight1, flight2 or flight3");
  gen->add_option("--spec", spec_file, "Scenario file with generator overrides")->check(CLI::ExistingFile);
  auto* seed_opt = gen->add_option("--seed", gen_seed, "World and noise seed");
  gen->add_option("--out", gen_out, "Dataset directory")->required();

  auto* run = app.add_subcommand("run", "Run SLAM on a dataset and write all artifacts");
  ConfigFlags run_flags;
  run_flags.attach(*run);

  auto* replay = app.add_subcommand("replay", "Frozen-dictionary pass recording e_k per frame");
  ConfigFlags replay_flags;
  replay_flags.attach(*replay);
  fs::path dictionary;
  replay->add_option("--dictionary", dictionary, "Checkpoint written by run")->required();

  auto* eval = app.add_subcommand("eval", "Align a trajectory CSV to ground truth and report MAE");
  ConfigFlags eval_flags;
  eval_flags.attach(*eval);
  fs::path traj_csv, gt_csv, map_csv;
  eval->add_option("--trajectory", traj_csv)->required()->check(CLI::ExistingFile);
  eval->add_option("--ground-truth", gt_csv)->required()->check(CLI::ExistingFile);
  eval->add_option("--map", map_csv, "map.csv; defaults to the trajectory points")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep-mu", "Pick the loop-closure threshold with the lowest MAE_L");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::string mu_values, mu_range;
  sweep->add_option("--mu-values", mu_values, "Comma separated thresholds");
  sweep->add_option("--mu-range", mu_range, "min:max:step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(scenario, spec_file, gen_seed, seed_opt->count() > 0, gen_out);
    if (run->parsed()) return cmd_run(run_flags.build(*run));
    if (replay->parsed()) return cmd_replay(replay_flags.build(*replay), dictionary);
    if (eval->parsed()) return cmd_eval(eval_flags.build(*eval), traj_csv, gt_csv, map_csv);
    if (sweep->parsed()) return cmd_sweep(sweep_flags.build(*sweep), parse_mu_list(mu_values, mu_range));
  } catch (const sslam::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitDataset;
  } catch (const sslam::DivergenceError& e) {
    std::cerr << "divergence at frame " << e.frame_id() << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
