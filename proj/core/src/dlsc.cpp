#include "sslam/dlsc.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "text_util.hpp"

namespace sslam {

DivergenceError::DivergenceError(std::uint64_t frame_id, int iteration, const std::string& what)
    : std::runtime_error(what), frame_id_(frame_id), iteration_(iteration) {}

void validate_frame(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0 || frame.channels <= 0)
    throw std::invalid_argument("frame: non-positive dimensions");
  const auto expected =
      static_cast<Eigen::Index>(frame.width) * frame.height * frame.channels;
  if (frame.pixels.size() != expected || expected == 0)
    throw std::invalid_argument("frame: pixel count does not match width*height*channels");
  if (!frame.pixels.allFinite() || frame.pixels.minCoeff() < 0.0 || frame.pixels.maxCoeff() > 1.0)
    throw std::invalid_argument("frame: pixel values must be finite and in [0,1]");
}

Dictionary::Dictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
  if (atoms_.cols() <= 0 || atoms_.rows() <= atoms_.cols())
    throw std::invalid_argument("dictionary must be under-complete (0 < M < N)");
  if (!atoms_.allFinite()) throw std::invalid_argument("dictionary has non-finite entries");
}

void DlscParams::validate() const {
  if (!(eta_c > 0.0)) throw std::invalid_argument("eta_c must be > 0");
  if (!(eta_d > 0.0)) throw std::invalid_argument("eta_d must be > 0");
  if (!(lambda1 >= 0.0)) throw std::invalid_argument("lambda1 must be >= 0");
  if (n_c < 1) throw std::invalid_argument("n_c must be >= 1");
  if (n_d < 1) throw std::invalid_argument("n_d must be >= 1");
  if (n_atoms < 1) throw std::invalid_argument("n_atoms must be >= 1");
  if (!(sigma_w > 0.0)) throw std::invalid_argument("sigma_w must be > 0");
  if (!(clip_atom_norm >= 0.0)) throw std::invalid_argument("clip_atom_norm must be >= 0");
}

Dictionary init_dictionary(std::size_t n, std::size_t m, double sigma_w, std::uint64_t seed) {
  if (m == 0 || m >= n)
    throw std::invalid_argument("init_dictionary: need n > m > 0 (under-complete)");
  if (!(sigma_w > 0.0)) throw std::invalid_argument("init_dictionary: sigma_w must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma_w);
  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  // Column-major fill, so the sample order is stable for a given (n, m, seed).
  for (Eigen::Index j = 0; j < atoms.cols(); ++j)
    for (Eigen::Index i = 0; i < atoms.rows(); ++i) atoms(i, j) = normal(rng);
  return Dictionary(std::move(atoms));
}

DlscParams scaled_for_input_size(const DlscParams& params, std::size_t reference_inputs,
                                 std::size_t inputs) {
  if (reference_inputs == 0 || inputs == 0)
    throw std::invalid_argument("scaled_for_input_size: sizes must be positive");
  const double kappa = static_cast<double>(reference_inputs) / static_cast<double>(inputs);
  DlscParams out = params;
  out.eta_c = params.eta_c * kappa;
  out.lambda1 = params.lambda1 / kappa;
  return out;
}

EncoderState make_encoder(std::size_t n_inputs, const DlscParams& params, std::uint64_t seed) {
  params.validate();
  EncoderState state;
  state.dictionary = init_dictionary(n_inputs, params.n_atoms, params.sigma_w, seed);
  state.code = SparseCode::Zero(static_cast<Eigen::Index>(params.n_atoms));
  state.params = params;
  state.rng_seed = seed;
  return state;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  return x.unaryExpr([tau](double v) { return std::max(0.0, v - tau) + std::min(0.0, v + tau); });
}

namespace {

void check_dims(const Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s) {
  if (static_cast<std::size_t>(c.size()) != d.n_atoms() ||
      static_cast<std::size_t>(s.size()) != d.n_inputs())
    throw std::invalid_argument("dimension mismatch between dictionary, code and frame");
}

}  // namespace

double reprojection_error(const Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s) {
  check_dims(d, c, s);
  return (d.atoms() * c - s).squaredNorm();
}

double reprojection_error(const Dictionary& d, const SparseCode& c, const Frame& s) {
  return reprojection_error(d, c, s.pixels);
}

double lasso_objective(const Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s,
                       double lambda1) {
  return 0.5 * reprojection_error(d, c, s) + lambda1 * c.lpNorm<1>();
}

SparseCode encode(EncoderState& state, const Frame& s, std::vector<double>* objective_trace) {
  const auto& params = state.params;
  const Eigen::MatrixXd& atoms = state.dictionary.atoms();
  if (state.code.size() == 0) state.code = SparseCode::Zero(atoms.cols());
  check_dims(state.dictionary, state.code, s.pixels);

  const double tau = params.eta_c * params.lambda1;
  SparseCode c = state.code;
  Eigen::VectorXd residual(atoms.rows());
  Eigen::VectorXd grad(atoms.cols());
  double prev_objective = std::numeric_limits<double>::infinity();

  auto track = [&](double objective) {
    if (objective_trace) objective_trace->push_back(objective);
    if (objective > prev_objective + 1e-12 * std::abs(prev_objective))
      ++state.descent_violations;
    prev_objective = objective;
  };

  for (int it = 0; it < params.n_c; ++it) {
    residual.noalias() = atoms * c;
    residual -= s.pixels;
    track(0.5 * residual.squaredNorm() + params.lambda1 * c.lpNorm<1>());
    grad.noalias() = atoms.transpose() * residual;
    c = soft_threshold(c - params.eta_c * grad, tau);
    if (!c.allFinite()) {
      std::ostringstream msg;
      msg << "sparse code diverged at frame " << s.id << ", coding iteration " << it;
      throw DivergenceError(s.id, it, msg.str());
    }
  }
  if (objective_trace) track(lasso_objective(state.dictionary, c, s.pixels, params.lambda1));

  state.code = c;
  return c;
}

void apply_dictionary_step(Dictionary& d, const SparseCode& c, const Eigen::VectorXd& s,
                           double eta_d, std::uint64_t frame_id, double clip_atom_norm) {
  check_dims(d, c, s);
  if (!(eta_d > 0.0)) throw std::invalid_argument("dictionary_step: eta_d must be > 0");
  Eigen::MatrixXd& atoms = d.atoms();
  const Eigen::VectorXd residual = atoms * c - s;
  atoms.noalias() -= (eta_d * residual) * c.transpose();
  if (clip_atom_norm > 0.0) {
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
      const double norm = atoms.col(j).norm();
      if (norm > clip_atom_norm) atoms.col(j) *= clip_atom_norm / norm;
    }
  }
  if (!atoms.allFinite()) {
    std::ostringstream msg;
    msg << "dictionary diverged at frame " << frame_id;
    throw DivergenceError(frame_id, -1, msg.str());
  }
}

Dictionary dictionary_step(const Dictionary& d, const SparseCode& c, const Frame& s,
                           double eta_d) {
  Dictionary out = d;
  apply_dictionary_step(out, c, s.pixels, eta_d, s.id);
  return out;
}

void save_dictionary(const Dictionary& d, std::ostream& out) {
  out << "DLSC v1 " << d.n_inputs() << ' ' << d.n_atoms() << '\n';
  const auto& atoms = d.atoms();
  std::string line;
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
      if (j) line += ' ';
      line += detail::format_double(atoms(i, j));
    }
    line += '\n';
    out << line;
  }
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_dictionary(d, out);
}

Dictionary load_dictionary(std::istream& in) {
  std::string magic, version;
  long long n = 0, m = 0;
  if (!(in >> magic >> version >> n >> m) || magic != "DLSC" || version != "v1")
    throw std::runtime_error("dictionary checkpoint: bad header (expected 'DLSC v1 N M')");
  if (n <= 0 || m <= 0) throw std::runtime_error("dictionary checkpoint: bad dimensions");
  Eigen::MatrixXd atoms(n, m);
  std::string token;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!(in >> token)) throw std::runtime_error("dictionary checkpoint: truncated");
      atoms(i, j) = detail::parse_double(token);
    }
  }
  return Dictionary(std::move(atoms));
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load_dictionary(in);
}

}  // namespace sslam
