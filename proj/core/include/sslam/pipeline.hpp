#ifndef SSLAM_PIPELINE_HPP
#define SSLAM_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sslam/backend.hpp"
#include "sslam/dataset.hpp"
#include "sslam/dlsc.hpp"
#include "sslam/eval.hpp"
#include "sslam/matcher.hpp"
#include "sslam/surprise.hpp"

namespace sslam {

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path out;
  DlscParams dlsc;
  /// Pixel count the DLSC settings were tuned for; 0 uses them as given.
  std::size_t reference_input_size = 0;
  MatcherParams matcher;
  RelaxParams backend;
  std::size_t surprise_window = 5;
  bool gating = true;
  std::uint64_t seed = 1;
  ColorMode color = ColorMode::gray;
  MappingNormalization mapping_normalization = MappingNormalization::map_points;
  GridSpec grid = GridSpec::default_grid();
  int grid_refine = 0;

  void validate() const;
  /// DLSC settings for frames of `n_inputs` pixels.
  DlscParams dlsc_for(std::size_t n_inputs) const;
  /// Every numeric setting as "key=value" lines, paths excluded. Feeds params_hash.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string params_hash() const;
};

/// Sets one field from its config-file key. Throws std::invalid_argument on an
/// unknown key or a malformed value.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);
/// Flat "key = value" file; '#' starts a comment.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
std::vector<std::string> config_keys();

struct TelemetryRow {
  std::uint64_t k = 0;
  double error = 0.0;
  std::optional<double> s2_raw;
  double s2_filtered = 1.0;
  bool gate_open = true;  // dictionary updated at this step
};

struct EncodeResult {
  std::vector<SparseCode> codes;
  std::vector<TelemetryRow> telemetry;
  EncoderState encoder;
  std::size_t dictionary_updates = 0;
};

/// Streams the frames in index order through the gated encoder. Throws DatasetError
/// on a sequence gap and DivergenceError when the encoder runs away.
EncodeResult run_encoder(const std::vector<Frame>& frames, const RunConfig& config);

/// Second pass with a frozen dictionary: code warm-started from zero, n_c iterations
/// per frame, returns ||D c_k - s_k||^2 per frame.
std::vector<double> replay_errors(const std::vector<Frame>& frames, const Dictionary& dictionary,
                                  const DlscParams& params);

struct MappingResult {
  TemplateStore templates;
  MapTracker tracker;
  std::size_t loop_closures = 0;

  Trajectory trajectory() const;
  std::vector<MapPoint> map_points() const;
};

/// Template sampling, loop-closure detection and experience-map updates over the codes.
MappingResult run_mapping(const Dataset& dataset, const std::vector<SparseCode>& codes,
                          const MatcherParams& matcher, const RelaxParams& relax);

struct Metrics {
  std::string scenario;
  double mae_l = 0.0;
  double mae_m = 0.0;
  AlignmentTransform transform;
  double mu = 0.0;
  std::string params_hash;
};

Metrics evaluate_mapping(const MappingResult& mapping, const Trajectory& ground_truth,
                         const RunConfig& config, const std::string& scenario);

/// Trajectory/map vs ground truth: nearest-timestamp pairing, grid-search alignment,
/// then both MAEs under the same transform.
Metrics evaluate_trajectory(const Trajectory& trajectory, const std::vector<MapPoint>& map_points,
                            const Trajectory& ground_truth, const GridSpec& grid, int refine,
                            MappingNormalization normalization);

struct RunArtifacts {
  EncodeResult encoding;
  MappingResult mapping;
  Metrics metrics;
};

RunArtifacts run_slam(const RunConfig& config, const Dataset& dataset);
RunArtifacts run_slam(const RunConfig& config);

struct SweepResult {
  double best_mu = 0.0;
  std::vector<Metrics> per_mu;
};

/// Runs mapping and evaluation once per mu, reusing one encoder pass. The lowest
/// mae_l wins, the earliest mu on ties.
SweepResult sweep_mu(const RunConfig& config, const Dataset& dataset, const EncodeResult& encoding,
                     const std::vector<double>& mus);

// Artifact writers (fixed file names under the output directory).
void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRow>& rows);
std::string metrics_json(const Metrics& metrics);
std::string sweep_json(const SweepResult& sweep);
void write_run_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);
void write_replay_csv(const std::filesystem::path& path, const std::vector<double>& errors);

}  // namespace sslam

#endif  // SSLAM_PIPELINE_HPP
