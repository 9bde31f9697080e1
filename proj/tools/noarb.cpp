#include "noarb/expcli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace ex = noarb::expcli;

namespace {

int run(const std::string &config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "noarb: cannot open " << config_path << "\n";
    return 1;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    std::cerr << "noarb: " << config_path << ": " << e.what() << "\n";
    return 1;
  }
  const auto config = ex::parse_config(j);
  const auto m = ex::run_experiment(config);
  for (const auto &c : m.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) {
      std::cout << " (" << c.detail << ")";
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << m.files.size() << " files and manifest.json to "
            << ex::output_directory(config).string() << "\n";
  return m.passed ? 0 : 2;
}

int list() {
  for (const auto &e : ex::catalog()) {
    std::cout << e.id << "\t" << e.summary << "\n";
    std::cout << "\t" << e.defaults.dump() << "\n";
  }
  return 0;
}

int verify(const std::string &manifest_path) {
  const auto bad = ex::verify_manifest(manifest_path);
  for (const auto &f : bad) {
    std::cout << "MISMATCH " << f << "\n";
  }
  if (bad.empty()) {
    std::cout << "all digests match\n";
  }
  return bad.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"noarb: no-arbitrage experiments"};
  app.require_subcommand(1);
  std::string config_path, manifest_path;
  auto *run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
  run_cmd->add_option("config", config_path, "config.json")->required();
  auto *list_cmd = app.add_subcommand("list", "list experiment ids and defaults");
  auto *verify_cmd = app.add_subcommand("verify", "recompute the digests in a manifest");
  verify_cmd->add_option("manifest", manifest_path, "manifest.json")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) {
      return run(config_path);
    }
    if (*list_cmd) {
      return list();
    }
    return verify(manifest_path);
  } catch (const std::exception &e) {
    std::cerr << "noarb: " << e.what() << "\n";
    return 1;
  }
}
