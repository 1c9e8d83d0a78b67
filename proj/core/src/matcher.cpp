#include "sslam/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "text_util.hpp"

namespace sslam {

namespace {

// Timestamps like k/10 do not subtract exactly; 1 ns of slack keeps the 100 ms
// cadence from skipping ticks.
constexpr double kClockSlack = 1e-9;

}  // namespace

void MatcherParams::validate() const {
  if (!(sample_period > 0.0)) throw std::invalid_argument("sample_period must be > 0");
  if (!(exclusion_window >= 0.0)) throw std::invalid_argument("exclusion_window must be >= 0");
  if (std::isnan(mu)) throw std::invalid_argument("mu must be a number");
}

double cosine_similarity(const SparseCode& a, const SparseCode& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: size mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero-norm code");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

bool TemplateStore::due(double timestamp, const MatcherParams& params) const {
  return !last_sample_time_ || timestamp - *last_sample_time_ >= params.sample_period - kClockSlack;
}

bool TemplateStore::maybe_sample(const SparseCode& code, double timestamp,
                                 std::int64_t experience_id, const MatcherParams& params) {
  if (last_sample_time_ && timestamp < *last_sample_time_)
    throw std::invalid_argument("template store: timestamps must be nondecreasing");
  if (!due(timestamp, params)) return false;
  const double norm = code.norm();
  if (norm == 0.0) {
    ++skipped_zero_norm_;
    std::clog << "warning: zero-norm code at t=" << timestamp << " not stored as template\n";
    return false;
  }
  Template t;
  t.template_id = static_cast<std::int64_t>(templates_.size());
  t.code = code;
  t.experience_id = experience_id;
  t.timestamp = timestamp;
  templates_.push_back(std::move(t));
  norms_.push_back(norm);
  last_sample_time_ = timestamp;
  return true;
}

std::optional<LoopMatch> TemplateStore::find_loop_closure(const SparseCode& code,
                                                          double timestamp,
                                                          const MatcherParams& params) const {
  const double qnorm = code.norm();
  if (qnorm == 0.0) return std::nullopt;
  std::optional<LoopMatch> best;
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const Template& t = templates_[i];
    if (!(timestamp - t.timestamp > params.exclusion_window)) continue;
    const double sim = std::clamp(t.code.dot(code) / (norms_[i] * qnorm), -1.0, 1.0);
    // Strict comparison over increasing ids keeps the older template on ties.
    if (!best || sim > best->similarity) best = LoopMatch{t.template_id, t.experience_id, sim};
  }
  if (best && best->similarity >= params.mu) return best;
  return std::nullopt;
}

void TemplateStore::write_csv(std::ostream& out) const {
  out << "template_id,experience_id,timestamp";
  const Eigen::Index m = templates_.empty() ? 0 : templates_.front().code.size();
  for (Eigen::Index j = 0; j < m; ++j) out << ",c" << j;
  out << '\n';
  for (const auto& t : templates_) {
    out << t.template_id << ',' << t.experience_id << ',' << detail::format_double(t.timestamp);
    for (Eigen::Index j = 0; j < t.code.size(); ++j)
      out << ',' << detail::format_double(t.code[j]);
    out << '\n';
  }
}

}  // namespace sslam
