#ifndef SSLAM_DLSC_HPP
#define SSLAM_DLSC_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sslam {

/// One observation of the stream: a flattened, row-major image with values in [0,1].
struct Frame {
  std::uint64_t id = 0;
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  int channels = 1;
  Eigen::VectorXd pixels;

  std::size_t size() const { return static_cast<std::size_t>(pixels.size()); }
};

/// Throws std::invalid_argument if the frame breaks its invariants.
void validate_frame(const Frame& frame);

/// Latent code of a frame; signed entries, length equals the number of atoms.
using SparseCode = Eigen::VectorXd;

/// Raised when an iterate or a dictionary update stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t frame_id, int iteration, const std::string& what);

  std::uint64_t frame_id() const { return frame_id_; }
  /// Coding iteration that produced the non-finite value, or -1 for a dictionary update.
  int iteration() const { return iteration_; }

 private:
  std::uint64_t frame_id_;
  int iteration_;
};

/// Under-complete dictionary: N inputs, M < N atoms stored as columns.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(Eigen::MatrixXd atoms);

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Eigen::MatrixXd& atoms() { return atoms_; }
  std::size_t n_inputs() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t n_atoms() const { return static_cast<std::size_t>(atoms_.cols()); }

  bool all_finite() const { return atoms_.allFinite(); }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() &&
           a.atoms_ == b.atoms_;
  }

 private:
  Eigen::MatrixXd atoms_;
};

struct DlscParams {
  double eta_c = 5e-3;        // coding step size
  double eta_d = 1.4e-3;      // dictionary learning rate
  double lambda1 = 0.2;       // l1 weight
  int n_c = 10;               // coding iterations per frame
  int n_d = 1;                // learning iterations per frame
  std::size_t n_atoms = 64;
  double sigma_w = 0.01;      // std of the initial dictionary entries
  double clip_atom_norm = 0;  // 0 disables column-norm clipping

  void validate() const;
};

/// Carries step size and l1 weight from `reference_inputs` pixels to `inputs` pixels by
/// treating every pixel as reference_inputs / inputs replicated reference pixels:
/// eta_c scales by that factor, lambda1 by its inverse. eta_d and sigma_w are unchanged.
DlscParams scaled_for_input_size(const DlscParams& params, std::size_t reference_inputs,
                                 std::size_t inputs);

/// Streaming encoder state. The code is carried from one frame to the next.
struct EncoderState {
  Dictionary dictionary;
  SparseCode code;
  double prev_error = 0.0;
  DlscParams params;
  std::uint64_t rng_seed = 0;
  /// Coding iterations whose LASSO objective rose above the previous iterate.
  std::size_t descent_violations = 0;
};

/// Fresh state: random dictionary, zero code.
EncoderState make_encoder(std::size_t n_inputs, const DlscParams& params, std::uint64_t seed);

/// Dictionary with i.i.d. N(0, sigma_w^2) entries. Requires n > m > 0.
Dictionary init_dictionary(std::size_t n, std::size_t m, double sigma_w, std::uint64_t seed);

/// Proximal operator of tau*||.||_1: max(0, x - tau) + min(0, x + tau).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau);

/// ||D c - s||_2^2.
double reprojection_error(const Dictionary& d, const SparseCode& c, const Frame& s);
double reprojection_error(const Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s);

/// 0.5 ||D c - s||^2 + lambda1 ||c||_1.
double lasso_objective(const Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s,
                       double lambda1);

/// Runs exactly params.n_c proximal-gradient iterations from state.code and stores
/// the result back into the state. When `objective_trace` is given it receives the
/// objective at the start of every iteration followed by the final objective.
SparseCode encode(EncoderState& state, const Frame& s,
                  std::vector<double>* objective_trace = nullptr);

/// One SGD step on 0.5 ||D c - s||^2 with respect to D.
Dictionary dictionary_step(const Dictionary& d, const SparseCode& c, const Frame& s,
                           double eta_d);

/// In-place variant used by the streaming loop. Optionally clips atom norms to
/// `clip_atom_norm` when it is positive.
void apply_dictionary_step(Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s,
                           double eta_d, std::uint64_t frame_id = 0, double clip_atom_norm = 0);

// Checkpoint format: "DLSC v1 N M" header, then N rows of M floats.
void save_dictionary(const Dictionary& d, std::ostream& out);
void save_dictionary(const Dictionary& d, const std::filesystem::path& path);
Dictionary load_dictionary(std::istream& in);
Dictionary load_dictionary(const std::filesystem::path& path);

}  // namespace sslam

#endif  // SSLAM_DLSC_HPP
