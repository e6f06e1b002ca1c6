#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fkl/errors.hpp"
#include "fkl/experiment.hpp"

namespace {

// exit codes: 0 success, 2 config error, 3 numerical failure, 4 IO error
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kIoError = 4;

void print_metrics(const std::filesystem::path& metrics_path) {
  std::ifstream in(metrics_path);
  nlohmann::json doc;
  in >> doc;
  for (auto it = doc["models"].begin(); it != doc["models"].end(); ++it) {
    const nlohmann::json& m = it.value();
    std::cout << "  " << it.key() << ": rmse=";
    if (m["rmse"].is_object())
      std::cout << m["rmse"]["mean"] << " +- " << m["rmse"]["std"];
    else
      std::cout << m["rmse"];
    std::cout << "  msll=";
    if (m["msll"].is_object())
      std::cout << m["msll"]["mean"] << " +- " << m["msll"]["std"];
    else
      std::cout << m["msll"];
    std::cout << '\n';
  }
}

int dispatch(const std::string& action, const std::string& config_path,
             const std::string& run_dir, int n_splits) {
  if (action == "validate") {
    fkl::load_config(config_path);
    std::cout << "config ok: " << config_path << '\n';
    return kOk;
  }
  if (action == "run") {
    const fkl::ExperimentConfig config = fkl::load_config(config_path);
    const fkl::RunArtifacts artifacts = fkl::run_experiment(config);
    std::cout << "wrote " << artifacts.metrics.parent_path().string() << '\n';
    print_metrics(artifacts.metrics);
    return kOk;
  }
  if (action == "splits") {
    const fkl::ExperimentConfig config = fkl::load_config(config_path);
    const std::filesystem::path metrics = fkl::run_splits(config, n_splits);
    std::cout << "wrote " << metrics.parent_path().string() << '\n';
    print_metrics(metrics);
    return kOk;
  }
  if (action == "plotdata") {
    const fkl::RunArtifacts artifacts = fkl::emit_plot_data(run_dir);
    std::cout << "wrote " << artifacts.spectrum.string() << '\n'
              << "wrote " << artifacts.kernel.string() << '\n'
              << "wrote " << artifacts.predictions.string() << '\n';
    return kOk;
  }
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"functional kernel learning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_dir;
  int n_splits = 10;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config");
  run->add_option("config", config_path, "experiment config file")->required();

  CLI::App* splits =
      app.add_subcommand("splits", "run the experiment over random splits");
  splits->add_option("config", config_path, "experiment config file")
      ->required();
  splits->add_option("--n", n_splits, "number of splits")
      ->check(CLI::PositiveNumber);

  CLI::App* plotdata = app.add_subcommand(
      "plotdata", "rebuild plot documents from a run's checkpoint");
  plotdata->add_option("run_dir", run_dir, "run output directory")->required();

  CLI::App* validate =
      app.add_subcommand("validate", "validate a config without computing");
  validate->add_option("config", config_path, "experiment config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kConfigError;
  }

  const std::string action = app.get_subcommands().front()->get_name();
  try {
    return dispatch(action, config_path, run_dir, n_splits);
  } catch (const fkl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fkl::EmptySplit& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fkl::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const fkl::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kIoError;
  } catch (const fkl::NonFiniteEntry& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}
