#include "noarb/expcli.hpp"

#include "noarb/format.hpp"
#include "noarb/path.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace noarb::expcli {

namespace fs = std::filesystem;

// ---- configuration -----------------------------------------------------------------

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", experiment},
          {"seed", seed},
          {"paths", paths},
          {"grid", {{"horizon", horizon}, {"steps", steps}}},
          {"confidence", confidence},
          {"output_dir", output_dir},
          {"params", params}};
}

const ExperimentInfo &find_experiment(const std::string &id) {
  for (const auto &e : catalog()) {
    if (e.id == id) {
      return e;
    }
  }
  throw ConfigError("unknown experiment id '" + id + "' (see `noarb list`)");
}

ExperimentConfig parse_config(const nlohmann::json &j) {
  static const std::vector<std::string> allowed = {"experiment", "seed",       "paths",
                                                   "grid",       "confidence", "output_dir",
                                                   "params"};
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  for (const auto &[key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!j.contains("experiment")) {
    throw ConfigError("config needs an 'experiment' id");
  }
  if (!j.contains("seed")) {
    throw ConfigError("config needs a 'seed'");
  }
  try {
    ExperimentConfig c;
    c.experiment = j.at("experiment").get<std::string>();
    const auto &info = find_experiment(c.experiment);
    const auto &seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    c.seed = seed.get<std::uint64_t>();
    c.paths = j.value("paths", info.defaults.at("paths").get<std::size_t>());
    c.horizon = info.defaults.at("horizon").get<double>();
    c.steps = info.defaults.at("steps").get<std::size_t>();
    if (j.contains("grid")) {
      const auto &g = j.at("grid");
      for (const auto &[key, _] : g.items()) {
        if (key != "horizon" && key != "steps") {
          throw ConfigError("unknown grid key '" + key + "'");
        }
      }
      c.horizon = g.value("horizon", c.horizon);
      c.steps = g.value("steps", c.steps);
    }
    c.confidence = j.value("confidence", 0.999);
    c.output_dir = j.value("output_dir", "noarb-out/" + c.experiment);
    c.params = info.defaults.at("params");
    if (j.contains("params")) {
      if (!j.at("params").is_object()) {
        throw ConfigError("params must be an object");
      }
      for (const auto &[key, value] : j.at("params").items()) {
        if (!c.params.contains(key)) {
          throw ConfigError("unknown parameter '" + key + "' for " + c.experiment);
        }
        if (c.params[key].is_number() != value.is_number() ||
            c.params[key].is_array() != value.is_array() ||
            c.params[key].is_string() != value.is_string()) {
          throw ConfigError("parameter '" + key + "' has the wrong type");
        }
        c.params[key] = value;
      }
    }
    if (c.paths == 0 || c.steps == 0 || !(c.horizon > 0.0)) {
      throw ConfigError("paths, steps and horizon must be positive");
    }
    if (!(c.confidence > 0.0 && c.confidence < 1.0)) {
      throw ConfigError("confidence must lie in (0, 1)");
    }
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.passed; });
}

// ---- emission ----------------------------------------------------------------------

nlohmann::json round12(const nlohmann::json &j) {
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (!std::isfinite(x)) {
      return nullptr;
    }
    return std::strtod(fmt12(x).c_str(), nullptr);
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &v : j) {
      out.push_back(round12(v));
    }
    return out;
  }
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto &[k, v] : j.items()) {
      out[k] = round12(v);
    }
    return out;
  }
  return j;
}

std::string table_csv(const Table &t) {
  std::ostringstream out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    out << (c ? "," : "") << t.columns[c];
  }
  out << '\n';
  for (const auto &row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << row[c];
    }
    out << '\n';
  }
  return out.str();
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;

std::pair<double, double> range_of(const std::vector<double> &v) {
  if (v.empty()) {
    return {0.0, 1.0};
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi > *lo ? *hi : *lo + 1.0};
}

} // namespace

std::string polyline_svg(const Polyline &p) {
  if (p.x.size() != p.y.size()) {
    throw DomainError("polyline coordinates differ in length");
  }
  const auto [x0, x1] = range_of(p.x);
  const auto [y0, y1] = range_of(p.y);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double px = (p.x[i] - x0) / (x1 - x0) * kWidth;
    const double py = kHeight - (p.y[i] - y0) / (y1 - y0) * kHeight;
    out << (i ? " " : "") << fmt12(px) << ',' << fmt12(py);
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

nlohmann::json polyline_sidecar(const Polyline &p) {
  const auto [x0, x1] = range_of(p.x);
  const auto [y0, y1] = range_of(p.y);
  return round12(nlohmann::json{{"name", p.name},
                                {"x_label", p.x_label},
                                {"y_label", p.y_label},
                                {"x_range", {x0, x1}},
                                {"y_range", {y0, y1}},
                                {"width", kWidth},
                                {"height", kHeight},
                                {"points", p.x.size()}});
}

std::string sha256_bytes(const std::string &bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string read_file(const fs::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OutputFile write_file(const fs::path &dir, const std::string &name, const std::string &bytes) {
  const fs::path target = dir / name;
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + target.string());
  }
  out << bytes;
  out.close();
  if (!out) {
    throw std::runtime_error("write failed for " + target.string());
  }
  return {name, sha256_bytes(bytes), bytes.size()};
}

nlohmann::json checks_json(const std::vector<Check> &checks) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &c : checks) {
    out.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return out;
}

} // namespace

std::string sha256_file(const fs::path &file) { return sha256_bytes(read_file(file)); }

std::vector<OutputFile> emit_report(const Report &report, Format format, const fs::path &dir) {
  fs::create_directories(dir);
  std::vector<OutputFile> files;
  switch (format) {
  case Format::csv:
    for (const auto &[name, table] : report.tables) {
      files.push_back(write_file(dir, name + ".csv", table_csv(table)));
    }
    break;
  case Format::json:
    for (const auto &[name, doc] : report.documents) {
      files.push_back(write_file(dir, name + ".json", round12(doc).dump(2) + "\n"));
    }
    files.push_back(write_file(
        dir, "checks.json",
        nlohmann::json{{"experiment", report.experiment},
                       {"passed", report.passed()},
                       {"checks", checks_json(report.checks)}}
                .dump(2) +
            "\n"));
    break;
  case Format::svg_data:
    for (const auto &p : report.plots) {
      files.push_back(write_file(dir, p.name + ".svg", polyline_svg(p)));
      files.push_back(write_file(dir, p.name + ".svg.json", polyline_sidecar(p).dump(2) + "\n"));
    }
    break;
  }
  return files;
}

// ---- manifests ---------------------------------------------------------------------

nlohmann::json RunManifest::to_json() const {
  nlohmann::json fl = nlohmann::json::array();
  for (const auto &f : files) {
    fl.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  return {{"config", config},         {"versions", versions}, {"wall_seconds", wall_seconds},
          {"files", fl},              {"checks", checks_json(checks)},
          {"passed", passed}};
}

RunManifest RunManifest::from_json(const nlohmann::json &j) {
  RunManifest m;
  m.config = j.at("config");
  m.versions = j.at("versions");
  m.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto &f : j.at("files")) {
    m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                       f.at("bytes").get<std::uintmax_t>()});
  }
  for (const auto &c : j.at("checks")) {
    m.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(),
                        c.at("detail").get<std::string>()});
  }
  m.passed = j.at("passed").get<bool>();
  return m;
}

fs::path output_directory(const ExperimentConfig &config) {
  fs::path dir(config.output_dir);
  if (dir.is_relative()) {
    if (const char *root = std::getenv("NOARB_OUTPUT_ROOT"); root && *root) {
      dir = fs::path(root) / dir;
    }
  }
  return dir;
}

RunManifest run_experiment(const ExperimentConfig &config) {
  const auto start = std::chrono::steady_clock::now();
  const Report report = run_report(config);
  const fs::path dir = output_directory(config);
  RunManifest m;
  m.config = config.to_json();
  m.versions = {{"noarb", "0.1.0"},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"boost", BOOST_LIB_VERSION}};
  for (const auto f : {Format::csv, Format::json, Format::svg_data}) {
    auto files = emit_report(report, f, dir);
    m.files.insert(m.files.end(), files.begin(), files.end());
  }
  m.checks = report.checks;
  m.passed = report.passed();
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << m.to_json().dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("cannot write manifest in " + dir.string());
  }
  return m;
}

std::vector<std::string> verify_manifest(const fs::path &manifest_path) {
  const auto m = RunManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
  const fs::path dir = manifest_path.parent_path();
  std::vector<std::string> bad;
  for (const auto &f : m.files) {
    const fs::path p = dir / f.path;
    if (!fs::exists(p) || sha256_file(p) != f.sha256) {
      bad.push_back(f.path);
    }
  }
  return bad;
}

} // namespace noarb::expcli
