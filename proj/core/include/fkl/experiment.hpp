#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkl/baselines.hpp"
#include "fkl/datasets.hpp"
#include "fkl/trainer.hpp"

namespace fkl {

struct DatasetSpec {
  enum class Kind { spectral_mixture, quasi_periodic, sinc, csv };
  Kind kind = Kind::spectral_mixture;
  // quasi_periodic
  double lengthscale = 2.0;
  double freq = 0.5;
  int n = 150;
  // sinc
  int sinc_n = 120;
  double lo = -15.0;
  double hi = 15.0;
  double noise_std = 0.01;
  // csv
  std::string path;
  CsvSchema schema;
};

/// Parsed and validated experiment description. Unknown keys anywhere in
/// the document are rejected before any compute.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool standardize = true;
  DatasetSpec dataset;
  SplitScheme split;
  TrainConfig train;
  std::vector<BaselineKind> baselines;
  BaselineConfig baseline_options;
  nlohmann::json echo;  // the validated document, embedded in artifacts
};

ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Output directory resolution: relative paths land under the
/// FKL_OUTPUT_ROOT environment variable when it is set.
std::filesystem::path resolve_output_dir(const std::string& configured);

/// The five per-run documents; every run emits all of them or fails loudly.
struct RunArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  std::filesystem::path predictions;
  std::filesystem::path spectrum;
  std::filesystem::path kernel;
};

/// load/generate -> split -> standardize -> fit -> predict -> metrics ->
/// emit artifacts. Baselines run on the same split with the same seed.
RunArtifacts run_experiment(const ExperimentConfig& config);

/// n_splits independent runs with derived seeds under split_XX/
/// subdirectories plus an aggregated metrics document (mean and sample
/// standard deviation per metric per model) at the top level.
std::filesystem::path run_splits(const ExperimentConfig& config, int n_splits);

/// Rebuild the plot documents (spectrum, kernel, predictions) of a finished
/// run from its checkpoint.
RunArtifacts emit_plot_data(const std::filesystem::path& run_dir);

}  // namespace fkl
