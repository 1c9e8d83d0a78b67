#include "sslam/surprise.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sslam {

double qbs_raw(double e_curr, double e_prev) { return e_curr - e_prev; }

SurpriseState::SurpriseState(std::size_t window) : window_(window) {
  if (window_ == 0) throw std::invalid_argument("surprise window must be >= 1");
}

GateDecision SurpriseState::update(double e_curr) {
  if (!std::isfinite(e_curr)) throw std::invalid_argument("surprise: non-finite error");
  if (!prev_error_) {
    prev_error_ = e_curr;
    return decision();
  }
  raw_.push_back(qbs_raw(e_curr, *prev_error_));
  if (raw_.size() > window_) raw_.pop_front();
  prev_error_ = e_curr;
  filtered_ = std::accumulate(raw_.begin(), raw_.end(), 0.0) / static_cast<double>(raw_.size());
  return decision();
}

std::optional<double> SurpriseState::last_raw() const {
  if (raw_.empty()) return std::nullopt;
  return raw_.back();
}

GateDecision qbs_update(SurpriseState& state, double e_curr) { return state.update(e_curr); }

LearningStep gated_learning_step(EncoderState& enc, SurpriseState& sur, const Frame& s,
                                 bool gating) {
  LearningStep step;
  step.code = encode(enc, s);
  step.applied = sur.decision();

  // Error of the new code under the dictionary it was inferred with, before learning.
  step.error = reprojection_error(enc.dictionary, step.code, s.pixels);
  if (!std::isfinite(step.error))
    throw DivergenceError(s.id, enc.params.n_c - 1, "reprojection error is not finite");

  if (!gating || step.applied.learn) {
    for (int i = 0; i < enc.params.n_d; ++i)
      apply_dictionary_step(enc.dictionary, step.code, s.pixels, enc.params.eta_d, s.id,
                            enc.params.clip_atom_norm);
    step.dictionary_updated = true;
  }

  const bool had_prev = sur.initialized();
  step.next = sur.update(step.error);
  if (had_prev) step.s2_raw = sur.last_raw();
  enc.prev_error = step.error;
  return step;
}

}  // namespace sslam
