#include "sslam/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace sslam {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// Parses the "Pn W H MAXVAL" header of a netpbm file; returns the payload offset.
std::size_t parse_netpbm_header(const std::string& data, const std::string& magic, int& width,
                                int& height, const fs::path& path) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  };
  try {
    if (next_token() != magic) throw DatasetError("");
    width = static_cast<int>(detail::parse_int(next_token()));
    height = static_cast<int>(detail::parse_int(next_token()));
    if (detail::parse_int(next_token()) != 255) throw DatasetError("");
  } catch (const std::exception&) {
    throw DatasetError(path.string() + ": expected an 8-bit " + magic + " image");
  }
  if (width <= 0 || height <= 0) throw DatasetError(path.string() + ": bad image size");
  return pos + 1;  // single whitespace byte after maxval
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t columns) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split(trimmed, ',');
    if (line_no == 1 && !fields.empty()) {
      const auto first = detail::trim(fields[0]);
      if (!first.empty() && (std::isalpha(static_cast<unsigned char>(first[0])) || first[0] == '#'))
        continue;  // header
    }
    if (fields.size() < columns)
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(columns) + " columns");
    std::vector<double> row;
    row.reserve(columns);
    try {
      for (std::size_t c = 0; c < columns; ++c) row.push_back(detail::parse_double(fields[c]));
    } catch (const std::invalid_argument& e) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json spec_value(const std::string& v) {
  try {
    const auto i = detail::parse_int(v);
    return i;
  } catch (const std::invalid_argument&) {
  }
  try {
    const double d = detail::parse_double(v);
    if (std::isfinite(d)) return d;
  } catch (const std::invalid_argument&) {
  }
  return v;
}

}  // namespace

fs::path frame_path(const fs::path& dir, std::size_t index, const char* extension) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06zu%s", index, extension);
  return dir / "frames" / name;
}

void write_pgm(const fs::path& path, int width, int height, const Eigen::VectorXd& pixels) {
  if (pixels.size() != static_cast<Eigen::Index>(width) * height)
    throw std::invalid_argument("write_pgm: pixel count mismatch");
  std::string data = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  data.reserve(data.size() + static_cast<std::size_t>(pixels.size()));
  for (Eigen::Index i = 0; i < pixels.size(); ++i)
    data.push_back(static_cast<char>(static_cast<unsigned char>(
        std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0))));
  write_file(path, data);
}

Frame read_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  Frame f;
  const std::size_t offset = parse_netpbm_header(data, "P5", f.width, f.height, path);
  const std::size_t n = static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height);
  if (data.size() < offset + n) throw DatasetError(path.string() + ": truncated image data");
  f.pixels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    f.pixels[static_cast<Eigen::Index>(i)] = static_cast<unsigned char>(data[offset + i]) / 255.0;
  return f;
}

Frame read_ppm(const fs::path& path, ColorMode mode) {
  const std::string data = read_file(path);
  Frame f;
  const std::size_t offset = parse_netpbm_header(data, "P6", f.width, f.height, path);
  const std::size_t n = static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height);
  if (data.size() < offset + 3 * n) throw DatasetError(path.string() + ": truncated image data");
  auto byte = [&](std::size_t i) { return static_cast<unsigned char>(data[offset + i]) / 255.0; };
  if (mode == ColorMode::rgb) {
    f.channels = 3;
    f.pixels.resize(static_cast<Eigen::Index>(3 * n));
    for (std::size_t i = 0; i < 3 * n; ++i) f.pixels[static_cast<Eigen::Index>(i)] = byte(i);
  } else {
    f.pixels.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      f.pixels[static_cast<Eigen::Index>(i)] =
          0.299 * byte(3 * i) + 0.587 * byte(3 * i + 1) + 0.114 * byte(3 * i + 2);
  }
  return f;
}

std::vector<OdometrySample> read_odometry_csv(const fs::path& path) {
  std::vector<OdometrySample> out;
  for (const auto& r : read_numeric_csv(path, 4)) {
    if (!out.empty() && r[0] < out.back().timestamp)
      throw DatasetError(path.string() + ": timestamps must be nondecreasing");
    out.push_back({r[0], r[1], r[2], r[3]});
  }
  return out;
}

Trajectory read_trajectory_csv(const fs::path& path) {
  Trajectory traj;
  for (const auto& r : read_numeric_csv(path, 3)) {
    if (!traj.empty() && r[0] < traj.points.back().timestamp)
      throw DatasetError(path.string() + ": timestamps must be nondecreasing");
    traj.points.push_back({r[0], r[1], r[2]});
  }
  return traj;
}

std::vector<MapPoint> read_map_csv(const fs::path& path) {
  std::vector<MapPoint> out;
  for (const auto& r : read_numeric_csv(path, 3)) out.push_back({r[1], r[2]});
  return out;
}

void write_ground_truth_csv(const fs::path& path, const Trajectory& traj) {
  std::string out = "timestamp,x,y\n";
  for (const auto& p : traj.points)
    out += detail::format_double(p.timestamp) + ',' + detail::format_double(p.x) + ',' +
           detail::format_double(p.y) + '\n';
  write_file(path, out);
}

Dataset to_dataset(const FlightRecord& record) {
  Dataset ds;
  ds.meta.width = record.width;
  ds.meta.height = record.height;
  ds.meta.frame_rate = record.frame_rate;
  ds.meta.seed = record.seed;
  ds.meta.scenario = record.scenario;
  ds.frames = record.frames;
  ds.odometry = record.odometry;
  ds.ground_truth = record.ground_truth;
  return ds;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  if (dataset.frames.size() != dataset.odometry.size())
    throw std::invalid_argument("write_dataset: one odometry row per frame required");
  fs::create_directories(dir / "frames");
  for (std::size_t k = 0; k < dataset.frames.size(); ++k) {
    const Frame& f = dataset.frames[k];
    if (f.channels != 1) throw std::invalid_argument("write_dataset: only grayscale frames are written");
    write_pgm(frame_path(dir, k), f.width, f.height, f.pixels);
  }

  std::string odo = "timestamp,dx,dy,dtheta\n";
  for (const auto& o : dataset.odometry)
    odo += detail::format_double(o.timestamp) + ',' + detail::format_double(o.dx) + ',' +
           detail::format_double(o.dy) + ',' + detail::format_double(o.dtheta) + '\n';
  write_file(dir / "odometry.csv", odo);
  write_ground_truth_csv(dir / "ground_truth.csv", dataset.ground_truth);

  nlohmann::json meta = {{"width", dataset.meta.width},
                         {"height", dataset.meta.height},
                         {"frame_rate", dataset.meta.frame_rate},
                         {"seed", dataset.meta.seed},
                         {"scenario", dataset.meta.scenario}};
  if (!dataset.meta.spec.empty()) {
    nlohmann::json spec = nlohmann::json::object();
    for (const auto& [k, v] : dataset.meta.spec) spec[k] = spec_value(v);
    meta["spec"] = spec;
  }
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir, ColorMode mode) {
  if (!fs::is_directory(dir)) throw DatasetError("dataset directory not found: " + dir.string());
  Dataset ds;
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    ds.meta.width = meta.at("width").get<int>();
    ds.meta.height = meta.at("height").get<int>();
    ds.meta.frame_rate = meta.at("frame_rate").get<double>();
    ds.meta.seed = meta.value("seed", std::uint64_t{0});
    ds.meta.scenario = meta.value("scenario", std::string{});
    if (meta.contains("spec"))
      for (const auto& [k, v] : meta["spec"].items())
        ds.meta.spec.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError((dir / "meta.json").string() + ": " + e.what());
  }

  ds.odometry = read_odometry_csv(dir / "odometry.csv");
  ds.ground_truth = read_trajectory_csv(dir / "ground_truth.csv");
  if (ds.odometry.empty()) throw DatasetError("dataset has no odometry rows");

  ds.frames.reserve(ds.odometry.size());
  for (std::size_t k = 0; k < ds.odometry.size(); ++k) {
    const auto pgm = frame_path(dir, k, ".pgm");
    const auto ppm = frame_path(dir, k, ".ppm");
    Frame f;
    if (mode == ColorMode::gray && fs::exists(pgm)) {
      f = read_pgm(pgm);
    } else if (fs::exists(ppm)) {
      f = read_ppm(ppm, mode);
    } else {
      throw DatasetError("missing frame " + std::to_string(k) + " (" + pgm.filename().string() +
                         (mode == ColorMode::rgb ? ", rgb mode needs .ppm frames" : "") + ")");
    }
    if (f.width != ds.meta.width || f.height != ds.meta.height)
      throw DatasetError("frame " + std::to_string(k) + " size differs from meta.json");
    f.id = k;
    f.timestamp = ds.odometry[k].timestamp;
    ds.frames.push_back(std::move(f));
  }
  if (fs::exists(frame_path(dir, ds.odometry.size(), ".pgm")) ||
      fs::exists(frame_path(dir, ds.odometry.size(), ".ppm")))
    throw DatasetError("more frames than odometry rows");
  return ds;
}

}  // namespace sslam
