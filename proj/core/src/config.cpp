#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sslam/pipeline.hpp"
#include "text_util.hpp"

namespace sslam {

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(v) + "'");
}

// "min:max:step"
GridRange parse_range(std::string_view v, double scale) {
  const auto parts = detail::split(v, ':');
  if (parts.size() != 3) throw std::invalid_argument("range must be min:max:step");
  return {detail::parse_double(parts[0]) * scale, detail::parse_double(parts[1]) * scale,
          detail::parse_double(parts[2]) * scale};
}

std::string format_range(const GridRange& r) {
  return detail::format_double(r.min) + ":" + detail::format_double(r.max) + ":" +
         detail::format_double(r.step);
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"dataset", [](RunConfig& c, std::string_view v) { c.dataset = std::string(v); }},
      {"out", [](RunConfig& c, std::string_view v) { c.out = std::string(v); }},
      {"eta_c", [](RunConfig& c, std::string_view v) { c.dlsc.eta_c = detail::parse_double(v); }},
      {"eta_d", [](RunConfig& c, std::string_view v) { c.dlsc.eta_d = detail::parse_double(v); }},
      {"lambda1", [](RunConfig& c, std::string_view v) { c.dlsc.lambda1 = detail::parse_double(v); }},
      {"n_c", [](RunConfig& c, std::string_view v) { c.dlsc.n_c = static_cast<int>(detail::parse_int(v)); }},
      {"n_d", [](RunConfig& c, std::string_view v) { c.dlsc.n_d = static_cast<int>(detail::parse_int(v)); }},
      {"n_atoms",
       [](RunConfig& c, std::string_view v) { c.dlsc.n_atoms = static_cast<std::size_t>(detail::parse_int(v)); }},
      {"sigma_w", [](RunConfig& c, std::string_view v) { c.dlsc.sigma_w = detail::parse_double(v); }},
      {"clip_atom_norm",
       [](RunConfig& c, std::string_view v) { c.dlsc.clip_atom_norm = detail::parse_double(v); }},
      {"reference_input_size",
       [](RunConfig& c, std::string_view v) {
         const long long n = detail::parse_int(v);
         if (n < 0) throw std::invalid_argument("must be >= 0");
         c.reference_input_size = static_cast<std::size_t>(n);
       }},
      {"mu", [](RunConfig& c, std::string_view v) { c.matcher.mu = detail::parse_double(v); }},
      {"sample_period",
       [](RunConfig& c, std::string_view v) { c.matcher.sample_period = detail::parse_double(v); }},
      {"exclusion_window",
       [](RunConfig& c, std::string_view v) { c.matcher.exclusion_window = detail::parse_double(v); }},
      {"alpha", [](RunConfig& c, std::string_view v) { c.backend.alpha = detail::parse_double(v); }},
      {"relax_iterations",
       [](RunConfig& c, std::string_view v) { c.backend.iterations = static_cast<int>(detail::parse_int(v)); }},
      {"surprise_window",
       [](RunConfig& c, std::string_view v) {
         c.surprise_window = static_cast<std::size_t>(detail::parse_int(v));
       }},
      {"gating", [](RunConfig& c, std::string_view v) { c.gating = parse_bool(v); }},
      {"seed", [](RunConfig& c, std::string_view v) { c.seed = static_cast<std::uint64_t>(detail::parse_int(v)); }},
      {"color",
       [](RunConfig& c, std::string_view v) {
         if (v == "gray") c.color = ColorMode::gray;
         else if (v == "rgb") c.color = ColorMode::rgb;
         else throw std::invalid_argument("color must be gray or rgb");
       }},
      {"mapping_norm",
       [](RunConfig& c, std::string_view v) {
         if (v == "map_points") c.mapping_normalization = MappingNormalization::map_points;
         else if (v == "t_end") c.mapping_normalization = MappingNormalization::t_end;
         else throw std::invalid_argument("mapping_norm must be map_points or t_end");
       }},
      {"grid_tx", [](RunConfig& c, std::string_view v) { c.grid.tx = parse_range(v, 1.0); }},
      {"grid_ty", [](RunConfig& c, std::string_view v) { c.grid.ty = parse_range(v, 1.0); }},
      {"grid_phi_deg",
       [](RunConfig& c, std::string_view v) { c.grid.phi = parse_range(v, std::numbers::pi / 180.0); }},
      {"grid_refine",
       [](RunConfig& c, std::string_view v) { c.grid_refine = static_cast<int>(detail::parse_int(v)); }},
  };
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(detail::trim(key));
  if (it == table.end()) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  try {
    it->second(config, detail::trim(value));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config key '" + std::string(key) + "': " + e.what());
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    apply_config_value(config, view.substr(0, eq), view.substr(eq + 1));
  }
}

void RunConfig::validate() const {
  dlsc.validate();
  matcher.validate();
  backend.validate();
  grid.validate();
  if (surprise_window < 1) throw std::invalid_argument("surprise_window must be >= 1");
  if (grid_refine < 0) throw std::invalid_argument("grid_refine must be >= 0");
}

DlscParams RunConfig::dlsc_for(std::size_t n_inputs) const {
  if (reference_input_size == 0) return dlsc;
  return scaled_for_input_size(dlsc, reference_input_size, n_inputs);
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  auto kv = [&](const char* k, const std::string& v) { s << k << '=' << v << '\n'; };
  auto num = [](double v) { return detail::format_double(v); };
  kv("eta_c", num(dlsc.eta_c));
  kv("eta_d", num(dlsc.eta_d));
  kv("lambda1", num(dlsc.lambda1));
  kv("n_c", std::to_string(dlsc.n_c));
  kv("n_d", std::to_string(dlsc.n_d));
  kv("n_atoms", std::to_string(dlsc.n_atoms));
  kv("sigma_w", num(dlsc.sigma_w));
  kv("clip_atom_norm", num(dlsc.clip_atom_norm));
  kv("reference_input_size", std::to_string(reference_input_size));
  kv("mu", num(matcher.mu));
  kv("sample_period", num(matcher.sample_period));
  kv("exclusion_window", num(matcher.exclusion_window));
  kv("alpha", num(backend.alpha));
  kv("relax_iterations", std::to_string(backend.iterations));
  kv("surprise_window", std::to_string(surprise_window));
  kv("gating", gating ? "true" : "false");
  kv("seed", std::to_string(seed));
  kv("color", color == ColorMode::gray ? "gray" : "rgb");
  kv("mapping_norm", mapping_normalization == MappingNormalization::map_points ? "map_points" : "t_end");
  kv("grid_tx", format_range(grid.tx));
  kv("grid_ty", format_range(grid.ty));
  kv("grid_phi", format_range(grid.phi));
  kv("grid_refine", std::to_string(grid_refine));
  return s.str();
}

std::string RunConfig::params_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(detail::fnv1a(canonical())));
  return buf;
}

}  // namespace sslam
