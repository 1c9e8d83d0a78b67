#ifndef SSLAM_SURPRISE_HPP
#define SSLAM_SURPRISE_HPP

#include <cstddef>
#include <deque>
#include <optional>

#include "sslam/dlsc.hpp"

namespace sslam {

/// Gate for the dictionary update: learn iff the smoothed surprise is strictly positive.
struct GateDecision {
  double s2 = 1.0;
  bool learn = true;
};

/// Raw quadratic surprise: difference of consecutive reprojection errors.
double qbs_raw(double e_curr, double e_prev);

/// Causal moving average of the raw surprise. Starts at S2 = 1 so the first frames learn.
class SurpriseState {
 public:
  explicit SurpriseState(std::size_t window = 5);

  /// Feeds the reprojection error of the newest frame and returns the resulting decision.
  /// The first call only records the error; the initial S2 = 1 is kept.
  GateDecision update(double e_curr);

  GateDecision decision() const { return {filtered_, filtered_ > 0.0}; }

  std::size_t window() const { return window_; }
  bool initialized() const { return prev_error_.has_value(); }
  std::optional<double> prev_error() const { return prev_error_; }
  /// Most recent raw value; empty before the second update.
  std::optional<double> last_raw() const;
  double s2_filtered() const { return filtered_; }
  const std::deque<double>& raw_history() const { return raw_; }

 private:
  std::size_t window_;
  std::deque<double> raw_;
  std::optional<double> prev_error_;
  double filtered_ = 1.0;
};

GateDecision qbs_update(SurpriseState& state, double e_curr);

/// Outcome of one streaming step.
struct LearningStep {
  SparseCode code;
  /// Reprojection error of the fresh code against the dictionary it was inferred with.
  double error = 0.0;
  /// Raw surprise computed from `error`; empty on the first frame.
  std::optional<double> s2_raw;
  /// Decision that gated the dictionary at this step (computed on the previous step).
  GateDecision applied;
  /// Decision produced by this step, used at the next one.
  GateDecision next;
  bool dictionary_updated = false;
};

/// Encodes the frame, runs n_d dictionary steps if the carried-over gate is open
/// (always, when `gating` is false) and then updates the surprise from the new error.
LearningStep gated_learning_step(EncoderState& enc, SurpriseState& sur, const Frame& s,
                                 bool gating = true);

}  // namespace sslam

#endif  // SSLAM_SURPRISE_HPP
