#include "sslam/pipeline.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace sslam {

namespace fs = std::filesystem;

EncodeResult run_encoder(const std::vector<Frame>& frames, const RunConfig& config) {
  config.validate();
  if (frames.empty()) throw DatasetError("no frames to encode");
  EncodeResult result;
  result.encoder = make_encoder(frames.front().size(), config.dlsc_for(frames.front().size()), config.seed);
  SurpriseState surprise(config.surprise_window);
  result.codes.reserve(frames.size());
  result.telemetry.reserve(frames.size());

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& frame = frames[k];
    // Strict stream order: ids must count up from the first frame without gaps.
    if (frame.id != frames.front().id + k)
      throw DatasetError("frame sequence gap: expected id " + std::to_string(frames.front().id + k) +
                         ", got " + std::to_string(frame.id));
    if (frame.size() != result.encoder.dictionary.n_inputs())
      throw DatasetError("frame " + std::to_string(frame.id) + " has a different size");
    const LearningStep step = gated_learning_step(result.encoder, surprise, frame, config.gating);
    result.codes.push_back(step.code);
    result.telemetry.push_back({frame.id, step.error, step.s2_raw, step.next.s2, step.dictionary_updated});
    if (step.dictionary_updated) ++result.dictionary_updates;
  }
  return result;
}

std::vector<double> replay_errors(const std::vector<Frame>& frames, const Dictionary& dictionary,
                                  const DlscParams& params) {
  EncoderState state;
  state.dictionary = dictionary;
  state.params = params;
  state.code = SparseCode::Zero(static_cast<Eigen::Index>(dictionary.n_atoms()));
  std::vector<double> errors;
  errors.reserve(frames.size());
  for (const auto& frame : frames) {
    const SparseCode code = encode(state, frame);
    errors.push_back(reprojection_error(state.dictionary, code, frame.pixels));
  }
  return errors;
}

Trajectory MappingResult::trajectory() const {
  Trajectory traj;
  for (const auto& row : tracker.corrected_trajectory())
    traj.points.push_back({row.timestamp, row.pose.x, row.pose.y});
  return traj;
}

std::vector<MapPoint> MappingResult::map_points() const {
  std::vector<MapPoint> points;
  for (const auto& e : tracker.map().experiences()) points.push_back({e.pose.x, e.pose.y});
  return points;
}

MappingResult run_mapping(const Dataset& dataset, const std::vector<SparseCode>& codes,
                          const MatcherParams& matcher, const RelaxParams& relax) {
  matcher.validate();
  if (codes.size() != dataset.frames.size() || dataset.odometry.size() != dataset.frames.size())
    throw DatasetError("codes, frames and odometry must have the same length");
  MappingResult result{TemplateStore{}, MapTracker{relax}, 0};
  for (std::size_t k = 0; k < codes.size(); ++k) {
    const double t = dataset.frames[k].timestamp;
    result.tracker.on_odometry(dataset.odometry[k]);
    if (result.templates.due(t, matcher)) {
      const auto match = result.templates.find_loop_closure(codes[k], t, matcher);
      std::optional<std::int64_t> target;
      if (match) {
        target = match->experience_id;
        ++result.loop_closures;
      }
      const auto id = result.tracker.on_sample(t, target);
      result.templates.maybe_sample(codes[k], t, id, matcher);
    }
    result.tracker.record(t);
  }
  return result;
}

Metrics evaluate_trajectory(const Trajectory& trajectory, const std::vector<MapPoint>& map_points,
                            const Trajectory& ground_truth, const GridSpec& grid, int refine,
                            MappingNormalization normalization) {
  const Trajectory matched = match_by_timestamp(trajectory, ground_truth);
  const AlignmentResult alignment = align_by_grid_search(trajectory, matched, grid, refine);
  std::vector<MapPoint> aligned;
  aligned.reserve(map_points.size());
  for (const auto& p : map_points) aligned.push_back(apply_transform(alignment.transform, p));
  Metrics m;
  m.mae_l = alignment.mae;
  m.mae_m = mae_mapping(aligned, ground_truth, normalization, trajectory.size());
  m.transform = alignment.transform;
  return m;
}

Metrics evaluate_mapping(const MappingResult& mapping, const Trajectory& ground_truth,
                         const RunConfig& config, const std::string& scenario) {
  Metrics m = evaluate_trajectory(mapping.trajectory(), mapping.map_points(), ground_truth, config.grid,
                                  config.grid_refine, config.mapping_normalization);
  m.scenario = scenario;
  m.mu = config.matcher.mu;
  m.params_hash = config.params_hash();
  return m;
}

RunArtifacts run_slam(const RunConfig& config, const Dataset& dataset) {
  config.validate();
  EncodeResult encoding = run_encoder(dataset.frames, config);
  MappingResult mapping = run_mapping(dataset, encoding.codes, config.matcher, config.backend);
  Metrics metrics = evaluate_mapping(mapping, dataset.ground_truth, config, dataset.meta.scenario);
  return {std::move(encoding), std::move(mapping), std::move(metrics)};
}

RunArtifacts run_slam(const RunConfig& config) {
  return run_slam(config, load_dataset(config.dataset, config.color));
}

SweepResult sweep_mu(const RunConfig& config, const Dataset& dataset, const EncodeResult& encoding,
                     const std::vector<double>& mus) {
  if (mus.empty()) throw std::invalid_argument("sweep_mu: need at least one mu");
  SweepResult result;
  std::size_t best = 0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    RunConfig c = config;
    c.matcher.mu = mus[i];
    const MappingResult mapping = run_mapping(dataset, encoding.codes, c.matcher, c.backend);
    result.per_mu.push_back(evaluate_mapping(mapping, dataset.ground_truth, c, dataset.meta.scenario));
    if (result.per_mu[i].mae_l < result.per_mu[best].mae_l) best = i;
  }
  result.best_mu = mus[best];
  return result;
}

void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRow>& rows) {
  out << "k,e_k,s2_raw,s2_filtered,gate_open\n";
  for (const auto& r : rows)
    out << r.k << ',' << detail::format_double(r.error) << ','
        << (r.s2_raw ? detail::format_double(*r.s2_raw) : std::string("nan")) << ','
        << detail::format_double(r.s2_filtered) << ',' << (r.gate_open ? 1 : 0) << '\n';
}

namespace {

nlohmann::json to_json(const Metrics& m) {
  return {{"scenario", m.scenario},
          {"mae_l", m.mae_l},
          {"mae_m", m.mae_m},
          {"transform", {{"tx", m.transform.tx}, {"ty", m.transform.ty}, {"phi", m.transform.phi}}},
          {"mu", m.mu},
          {"params_hash", m.params_hash}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_text(path, s.str());
}

}  // namespace

std::string metrics_json(const Metrics& metrics) { return to_json(metrics).dump(2) + "\n"; }

std::string sweep_json(const SweepResult& sweep) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& m : sweep.per_mu) runs.push_back(to_json(m));
  return nlohmann::json{{"best_mu", sweep.best_mu}, {"runs", runs}}.dump(2) + "\n";
}

void write_run_artifacts(const RunArtifacts& artifacts, const fs::path& dir) {
  fs::create_directories(dir);
  write_with(dir / "trajectory.csv",
             [&](std::ostream& s) { write_trajectory_csv(s, artifacts.mapping.tracker.corrected_trajectory()); });
  write_with(dir / "map.csv", [&](std::ostream& s) { artifacts.mapping.tracker.map().write_map_csv(s); });
  write_with(dir / "links.csv", [&](std::ostream& s) { artifacts.mapping.tracker.map().write_links_csv(s); });
  write_with(dir / "templates.csv", [&](std::ostream& s) { artifacts.mapping.templates.write_csv(s); });
  write_with(dir / "surprise.csv", [&](std::ostream& s) { write_telemetry_csv(s, artifacts.encoding.telemetry); });
  save_dictionary(artifacts.encoding.encoder.dictionary, dir / "dictionary.dlsc");
  write_text(dir / "metrics.json", metrics_json(artifacts.metrics));
}

void write_replay_csv(const fs::path& path, const std::vector<double>& errors) {
  std::string out = "k,e_k\n";
  for (std::size_t k = 0; k < errors.size(); ++k)
    out += std::to_string(k) + ',' + detail::format_double(errors[k]) + '\n';
  write_text(path, out);
}

}  // namespace sslam
