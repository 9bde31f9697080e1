#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace noarb::expcli {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  double horizon = 1.0;
  std::size_t steps = 0;
  double confidence = 0.999;
  std::string output_dir;
  nlohmann::json params = nlohmann::json::object(); // defaults merged in

  nlohmann::json to_json() const;
};

/// Strict parse: unknown keys (top level or in params) and a missing seed
/// are ConfigErrors. Per-experiment defaults fill everything else.
ExperimentConfig parse_config(const nlohmann::json &j);

struct ExperimentInfo {
  std::string id;
  std::string summary;
  nlohmann::json defaults; // paths, steps, horizon, params
};

const std::vector<ExperimentInfo> &catalog();
const ExperimentInfo &find_experiment(const std::string &id);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Polyline {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::string experiment;
  std::map<std::string, Table> tables;
  std::map<std::string, nlohmann::json> documents;
  std::vector<Polyline> plots;
  std::vector<Check> checks;

  bool passed() const;
};

/// Runs the experiment in memory.
Report run_report(const ExperimentConfig &config);

enum class Format { csv, json, svg_data };

struct OutputFile {
  std::string path; // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Writes the report in one format; byte-identical for identical reports.
std::vector<OutputFile> emit_report(const Report &report, Format format,
                                    const std::filesystem::path &dir);

struct RunManifest {
  nlohmann::json config;
  nlohmann::json versions;
  double wall_seconds = 0.0;
  std::vector<OutputFile> files;
  std::vector<Check> checks;
  bool passed = false;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json &j);
};

/// Output directory: config.output_dir, resolved under $NOARB_OUTPUT_ROOT when
/// relative and the variable is set; "noarb-out/<id>" by default.
std::filesystem::path output_directory(const ExperimentConfig &config);

/// Runs, emits every format and writes manifest.json into the output directory.
RunManifest run_experiment(const ExperimentConfig &config);

std::string sha256_file(const std::filesystem::path &file);
std::string sha256_bytes(const std::string &bytes);

/// Files whose digest no longer matches, relative to the manifest's directory.
std::vector<std::string> verify_manifest(const std::filesystem::path &manifest_path);

/// Numbers rounded to 12 significant digits, recursively.
nlohmann::json round12(const nlohmann::json &j);

std::string table_csv(const Table &t);
std::string polyline_svg(const Polyline &p);
nlohmann::json polyline_sidecar(const Polyline &p);

} // namespace noarb::expcli
