#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vacprobe/harness.hpp"
#include "vacprobe/integrator.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

vacprobe::RunConfig read_config(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw vacprobe::ConfigError("cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw vacprobe::ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw vacprobe::ConfigError("config file must hold a JSON object");
  if (const auto it = j.find("experiment"); it != j.end() && *it != experiment)
    throw vacprobe::ConfigError("config names experiment " + it->dump() + " but '" + experiment + "' was requested");
  j["experiment"] = experiment;
  return vacprobe::parse_run_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-QED vacuum probe: adiabatic photon removal and replacement experiments"};
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  int workers = 0;
  app.add_option("experiment", experiment, "Experiment id")
      ->required()
      ->check(CLI::IsMember(vacprobe::experiment_ids()));
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--workers", workers, "Concurrent workers for sweeps (overrides workers)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const vacprobe::RunConfig config = read_config(config_path, experiment);
    const std::string dir = out_dir.empty() ? config.output.dir : out_dir;
    const int threads = workers > 0 ? workers : config.workers;
    for (const auto& path : vacprobe::run_experiment(config, dir, threads, std::cerr)) std::cout << path.string() << '\n';
    return 0;
  } catch (const vacprobe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
