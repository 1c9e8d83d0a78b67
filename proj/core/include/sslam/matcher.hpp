#ifndef SSLAM_MATCHER_HPP
#define SSLAM_MATCHER_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sslam/dlsc.hpp"

namespace sslam {

struct Template {
  std::int64_t template_id = 0;
  SparseCode code;
  std::int64_t experience_id = 0;
  double timestamp = 0.0;
};

struct MatcherParams {
  double mu = 0.9;                // similarity threshold
  double sample_period = 0.1;     // seconds between stored templates
  double exclusion_window = 10.0; // templates younger than this never match

  void validate() const;
};

struct LoopMatch {
  std::int64_t template_id = 0;
  std::int64_t experience_id = 0;
  double similarity = 0.0;
};

/// Cosine similarity; throws std::invalid_argument on a zero-norm input.
double cosine_similarity(const SparseCode& a, const SparseCode& b);

/// Templates sampled from the code stream, queried for loop closures by linear scan.
class TemplateStore {
 public:
  /// True when a template would be taken at `timestamp` (empty store or period elapsed).
  bool due(double timestamp, const MatcherParams& params) const;

  /// Stores a copy of `code` if due. Zero-norm codes are skipped with a warning and do
  /// not advance the sampling clock.
  bool maybe_sample(const SparseCode& code, double timestamp, std::int64_t experience_id,
                    const MatcherParams& params);

  /// Best template older than the exclusion window, if its similarity reaches mu.
  /// Ties go to the older template.
  std::optional<LoopMatch> find_loop_closure(const SparseCode& code, double timestamp,
                                             const MatcherParams& params) const;

  const std::vector<Template>& templates() const { return templates_; }
  std::size_t size() const { return templates_.size(); }
  std::size_t skipped_zero_norm() const { return skipped_zero_norm_; }

  /// CSV: template_id, experience_id, timestamp, code...
  void write_csv(std::ostream& out) const;

 private:
  std::vector<Template> templates_;
  std::vector<double> norms_;
  std::optional<double> last_sample_time_;
  std::size_t skipped_zero_norm_ = 0;
};

}  // namespace sslam

#endif  // SSLAM_MATCHER_HPP
