#include "fkl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fkl/errors.hpp"
#include "fkl/predict.hpp"
#include "fkl/rng.hpp"

namespace fkl {

using nlohmann::json;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// ---------------------------------------------------------------- config

void check_keys(const json& obj, const std::string& where,
                std::set<std::string> allowed,
                std::initializer_list<const char*> required) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  for (const char* key : required)
    if (!obj.contains(key))
      throw ConfigError(where + ": missing required key '" + key + "'");
}

double get_number(const json& obj, const std::string& where,
                  const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& where, const std::string& key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean())
    throw ConfigError(where + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& where,
                       const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string())
    throw ConfigError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

DatasetSpec parse_dataset(const json& obj,
                          const std::filesystem::path& base_dir) {
  DatasetSpec spec;
  if (obj.contains("csv")) {
    check_keys(obj, "dataset", {"csv", "inputs", "target", "task"},
               {"csv", "inputs", "target"});
    spec.kind = DatasetSpec::Kind::csv;
    std::filesystem::path p = get_string(obj, "dataset", "csv", "");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.path = p.string();
    if (!obj["inputs"].is_array())
      throw ConfigError("dataset.inputs: expected an array of column names");
    for (const json& c : obj["inputs"]) {
      if (!c.is_string())
        throw ConfigError("dataset.inputs: expected column names");
      spec.schema.input_columns.push_back(c.get<std::string>());
    }
    spec.schema.target_column = get_string(obj, "dataset", "target", "");
    if (obj.contains("task"))
      spec.schema.task_column = get_string(obj, "dataset", "task", "");
    return spec;
  }

  const std::string generator = get_string(obj, "dataset", "generator", "");
  if (generator == "spectral_mixture") {
    check_keys(obj, "dataset", {"generator"}, {"generator"});
    spec.kind = DatasetSpec::Kind::spectral_mixture;
  } else if (generator == "quasi_periodic") {
    check_keys(obj, "dataset", {"generator", "lengthscale", "freq", "n"},
               {"generator"});
    spec.kind = DatasetSpec::Kind::quasi_periodic;
    spec.lengthscale = get_number(obj, "dataset", "lengthscale", 2.0);
    spec.freq = get_number(obj, "dataset", "freq", 0.5);
    spec.n = get_int(obj, "dataset", "n", 150);
  } else if (generator == "sinc") {
    check_keys(obj, "dataset", {"generator", "n", "lo", "hi", "noise_std"},
               {"generator"});
    spec.kind = DatasetSpec::Kind::sinc;
    spec.sinc_n = get_int(obj, "dataset", "n", 120);
    spec.lo = get_number(obj, "dataset", "lo", -15.0);
    spec.hi = get_number(obj, "dataset", "hi", 15.0);
    spec.noise_std = get_number(obj, "dataset", "noise_std", 0.01);
  } else {
    throw ConfigError("dataset: unknown generator '" + generator + "'");
  }
  return spec;
}

SplitScheme parse_split(const json& obj) {
  const std::string scheme = get_string(obj, "split", "scheme", "");
  if (scheme == "random_fraction") {
    check_keys(obj, "split", {"scheme", "fraction"}, {"scheme"});
    return SplitScheme::random_fraction(
        get_number(obj, "split", "fraction", 0.9), 0);
  }
  if (scheme == "extrapolate_tail") {
    check_keys(obj, "split", {"scheme", "count"}, {"scheme", "count"});
    return SplitScheme::extrapolate_tail(get_int(obj, "split", "count", 0));
  }
  if (scheme == "holdout_band") {
    check_keys(obj, "split", {"scheme", "lo", "hi"}, {"scheme", "lo", "hi"});
    return SplitScheme::holdout_band(get_number(obj, "split", "lo", 0.0),
                                     get_number(obj, "split", "hi", 0.0));
  }
  throw ConfigError("split: unknown scheme '" + scheme + "'");
}

FitMode parse_mode(const std::string& name) {
  if (name == "single") return FitMode::single;
  if (name == "multi_input_shared") return FitMode::multi_input_shared;
  if (name == "multi_input_separate") return FitMode::multi_input_separate;
  if (name == "multi_task") return FitMode::multi_task;
  throw ConfigError("train.mode: unknown mode '" + name + "'");
}

std::string mode_name(FitMode mode) {
  switch (mode) {
    case FitMode::single: return "single";
    case FitMode::multi_input_shared: return "multi_input_shared";
    case FitMode::multi_input_separate: return "multi_input_separate";
    case FitMode::multi_task: return "multi_task";
  }
  return "?";
}

TrainConfig parse_train(const json& obj) {
  TrainConfig cfg;
  if (obj.is_null()) return cfg;
  check_keys(obj, "train",
             {"mode", "rounds", "n_optim", "n_ess", "j_samples", "thin",
              "grid_size", "freq_scale", "learning_rate", "per_task_noise"},
             {});
  cfg.mode = parse_mode(get_string(obj, "train", "mode", "single"));
  cfg.rounds = get_int(obj, "train", "rounds", cfg.rounds);
  cfg.n_optim = get_int(obj, "train", "n_optim", cfg.n_optim);
  cfg.n_ess = get_int(obj, "train", "n_ess", cfg.n_ess);
  cfg.j_samples = get_int(obj, "train", "j_samples", cfg.j_samples);
  cfg.thin = get_int(obj, "train", "thin", cfg.thin);
  cfg.grid_size = get_int(obj, "train", "grid_size", cfg.grid_size);
  cfg.freq_scale = get_number(obj, "train", "freq_scale", cfg.freq_scale);
  cfg.learning_rate =
      get_number(obj, "train", "learning_rate", cfg.learning_rate);
  cfg.per_task_noise =
      get_bool(obj, "train", "per_task_noise", cfg.per_task_noise);
  if (cfg.rounds < 1 || cfg.n_optim < 0 || cfg.n_ess < 1 || cfg.j_samples < 1 ||
      cfg.thin < 1 || cfg.grid_size < 2)
    throw ConfigError("train: counts out of range");
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const json& doc,
                              const std::filesystem::path& base_dir) {
  check_keys(doc, "config",
             {"experiment", "seed", "output_dir", "standardize", "dataset",
              "split", "train", "baselines", "baseline_options"},
             {"experiment", "dataset", "split"});
  ExperimentConfig cfg;
  cfg.experiment = get_string(doc, "config", "experiment", "");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer())
      throw ConfigError("config.seed: expected an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  cfg.output_dir = get_string(doc, "config", "output_dir", cfg.experiment);
  cfg.standardize = get_bool(doc, "config", "standardize", true);
  cfg.dataset = parse_dataset(doc.at("dataset"), base_dir);
  cfg.split = parse_split(doc.at("split"));
  cfg.train = parse_train(doc.contains("train") ? doc["train"] : json());

  if (doc.contains("baselines")) {
    if (!doc["baselines"].is_array())
      throw ConfigError("config.baselines: expected an array");
    for (const json& b : doc["baselines"]) {
      if (!b.is_string()) throw ConfigError("config.baselines: expected names");
      cfg.baselines.push_back(baseline_from_name(b.get<std::string>()));
    }
  }
  if (doc.contains("baseline_options")) {
    const json& opts = doc["baseline_options"];
    check_keys(opts, "baseline_options",
               {"steps", "learning_rate", "sm_components", "sm_data_init"}, {});
    cfg.baseline_options.steps =
        get_int(opts, "baseline_options", "steps", cfg.baseline_options.steps);
    cfg.baseline_options.learning_rate =
        get_number(opts, "baseline_options", "learning_rate",
                   cfg.baseline_options.learning_rate);
    cfg.baseline_options.sm_components = get_int(
        opts, "baseline_options", "sm_components",
        cfg.baseline_options.sm_components);
    cfg.baseline_options.sm_data_init =
        get_bool(opts, "baseline_options", "sm_data_init",
                 cfg.baseline_options.sm_data_init);
  }
  cfg.echo = doc;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::filesystem::path resolve_output_dir(const std::string& configured) {
  std::filesystem::path p = configured.empty() ? "fkl-run" : configured;
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("FKL_OUTPUT_ROOT"))
    return std::filesystem::path(root) / p;
  return p;
}

// ------------------------------------------------------------ run internals

namespace {

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  switch (cfg.dataset.kind) {
    case DatasetSpec::Kind::spectral_mixture:
      return gen_spectral_mixture(run_seed);
    case DatasetSpec::Kind::quasi_periodic:
      return gen_quasi_periodic(run_seed, cfg.dataset.lengthscale,
                                cfg.dataset.freq, cfg.dataset.n);
    case DatasetSpec::Kind::sinc:
      return gen_sinc(cfg.dataset.sinc_n, cfg.dataset.lo, cfg.dataset.hi,
                      cfg.dataset.noise_std, run_seed);
    case DatasetSpec::Kind::csv:
      return load_csv(cfg.dataset.path, cfg.dataset.schema);
  }
  throw ConfigError("dataset: unhandled kind");
}

struct PreparedRun {
  Dataset train_orig, test_orig;
  Dataset train, test;  // model space (standardized when configured)
  double y_mean = 0.0, y_sd = 1.0;
  std::vector<TaskData> train_tasks, test_tasks;
  double train_mean = 0.0, train_var = 1.0;  // model-space train stats
};

PreparedRun prepare(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  Dataset full = build_dataset(cfg, run_seed);
  SplitScheme scheme = cfg.split;
  scheme.seed = run_seed;
  PreparedRun run;
  std::tie(run.train_orig, run.test_orig) = split(full, scheme);

  run.train = run.train_orig;
  run.test = run.test_orig;
  if (cfg.standardize) {
    const Standardizer x_std = Standardizer::fit(run.train_orig.inputs);
    const Standardizer y_std = Standardizer::fit(run.train_orig.targets);
    run.train.inputs = x_std.apply(run.train_orig.inputs);
    run.test.inputs = x_std.apply(run.test_orig.inputs);
    run.train.targets = y_std.apply(run.train_orig.targets);
    run.test.targets = y_std.apply(run.test_orig.targets);
    run.y_mean = y_std.mean[0];
    run.y_sd = y_std.stddev[0];
  }
  run.train_tasks = run.train.tasks();
  run.test_tasks = run.test.tasks();

  run.train_mean = run.train.targets.mean();
  const double n = static_cast<double>(run.train.targets.size());
  run.train_var = (run.train.targets.array() - run.train_mean).square().sum() /
                  std::max(n - 1.0, 1.0);
  if (run.train_var <= 0.0) run.train_var = 1.0;
  return run;
}

void validate_mode(const ExperimentConfig& cfg, const PreparedRun& run) {
  const bool has_tasks = run.train.has_tasks();
  const int dims = run.train.dims();
  switch (cfg.train.mode) {
    case FitMode::single:
      if (dims != 1)
        throw ConfigError("train.mode single requires 1-d inputs");
      if (has_tasks)
        throw ConfigError("train.mode single cannot use a task column");
      break;
    case FitMode::multi_input_shared:
    case FitMode::multi_input_separate:
      if (has_tasks)
        throw ConfigError("multi-input modes cannot use a task column");
      break;
    case FitMode::multi_task:
      if (!has_tasks)
        throw ConfigError("train.mode multi_task requires a task column");
      break;
  }
}

FittedModel fit_for_mode(const ExperimentConfig& cfg, const PreparedRun& run,
                         std::uint64_t run_seed) {
  TrainConfig train = cfg.train;
  train.seed = run_seed;
  switch (train.mode) {
    case FitMode::single:
      return fit(run.train_tasks[0], train);
    case FitMode::multi_input_shared:
    case FitMode::multi_input_separate:
      return fit_multi_input(run.train_tasks[0], train);
    case FitMode::multi_task:
      return fit_multi_task(run.train_tasks, train);
  }
  throw ConfigError("unhandled train.mode");
}

// Pooled per-point predictive state across tasks, in model space.
struct PooledPrediction {
  std::vector<double> y, mean, var, log_density;
};

void pool_mixture(const PredictiveMixture& mixture, const Vector& y,
                  PooledPrediction* pool) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    pool->y.push_back(y[i]);
    pool->mean.push_back(mixture.mean[i]);
    pool->var.push_back(mixture.variance[i]);
    pool->log_density.push_back(mixture.log_density(i, y[i]));
  }
}

MetricValues metrics_from_pool(const PooledPrediction& pool, double train_mean,
                               double train_var) {
  const std::size_t n = pool.y.size();
  double se = 0.0;
  double y_mean = 0.0;
  for (double v : pool.y) y_mean += v;
  y_mean /= double(n);
  double y_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = pool.mean[i] - pool.y[i];
    se += e * e;
    y_var += (pool.y[i] - y_mean) * (pool.y[i] - y_mean);
  }
  const double mse = se / double(n);
  y_var /= double(n);
  if (y_var <= 0.0)
    throw DegenerateVariance("test targets have zero variance; SMSE undefined");

  MetricValues m;
  m.rmse = std::sqrt(mse);
  m.smse = mse / y_var;
  for (std::size_t i = 0; i < n; ++i) {
    const double r0 = pool.y[i] - train_mean;
    const double ld_trivial =
        -0.5 * (r0 * r0 / train_var + std::log(train_var) + kLog2Pi);
    const double rg = pool.y[i] - pool.mean[i];
    const double ld_g =
        -0.5 * (rg * rg / pool.var[i] + std::log(pool.var[i]) + kLog2Pi);
    m.nll -= pool.log_density[i];
    m.nll_gaussian -= ld_g;
    m.msll += ld_trivial - pool.log_density[i];
    m.msll_gaussian += ld_trivial - ld_g;
  }
  m.msll /= double(n);
  m.msll_gaussian /= double(n);
  return m;
}

// Transform model-space metrics back to original units: rmse scales by the
// target sd, densities shift by n log(sd), smse and msll are invariant.
MetricValues to_original_units(const MetricValues& m, double y_sd,
                               std::size_t n) {
  MetricValues out = m;
  out.rmse = m.rmse * y_sd;
  out.nll = m.nll + double(n) * std::log(y_sd);
  out.nll_gaussian = m.nll_gaussian + double(n) * std::log(y_sd);
  return out;
}

json metrics_to_json(const MetricValues& m) {
  return json{{"rmse", m.rmse},
              {"smse", m.smse},
              {"msll", m.msll},
              {"nll", m.nll},
              {"msll_gaussian", m.msll_gaussian},
              {"nll_gaussian", m.nll_gaussian}};
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void atomic_write(const std::filesystem::path& path, const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << body;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string document_header(const ExperimentConfig& cfg, std::uint64_t run_seed,
                            const std::string& columns) {
  std::ostringstream out;
  out << "# config: " << cfg.echo.dump() << "\n";
  out << "# seed: " << run_seed << "\n";
  out << "# columns: " << columns << "\n";
  return out.str();
}

std::string spectrum_document(const ExperimentConfig& cfg,
                              std::uint64_t run_seed,
                              const FittedModel& model) {
  const int j_count = static_cast<int>(model.latent_samples[0].size());
  std::string columns = "unit omega mean lower upper";
  for (int j = 1; j <= j_count; ++j) columns += " s" + std::to_string(j);
  std::ostringstream out;
  out << document_header(cfg, run_seed, columns);
  for (int unit = 0; unit < model.units(); ++unit) {
    const FrequencyGrid& grid = model.grid_for_unit(unit);
    for (int i = 0; i < grid.count(); ++i) {
      double mean = 0.0, sq = 0.0;
      std::vector<double> values(j_count);
      for (int j = 0; j < j_count; ++j) {
        values[j] = std::exp(model.latent_samples[unit][j][i]);
        mean += values[j];
      }
      mean /= j_count;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double sd = j_count > 1 ? std::sqrt(sq / (j_count - 1)) : 0.0;
      out << unit << ' ' << format_double(grid.omegas[i]) << ' '
          << format_double(mean) << ' ' << format_double(mean - 2 * sd) << ' '
          << format_double(mean + 2 * sd);
      for (double v : values) out << ' ' << format_double(v);
      out << '\n';
    }
  }
  return out.str();
}

std::string kernel_document(const ExperimentConfig& cfg, std::uint64_t run_seed,
                            const FittedModel& model) {
  const auto kernels = posterior_kernels(model);
  const int j_count = static_cast<int>(kernels[0].size());
  std::string columns = "unit tau mean lower upper";
  for (int j = 1; j <= j_count; ++j) columns += " k" + std::to_string(j);
  std::ostringstream out;
  out << document_header(cfg, run_seed, columns);
  const int n_tau = 201;
  for (int unit = 0; unit < model.units(); ++unit) {
    const double tau_max = model.grid_for_unit(unit).period / 8.0;
    for (int t = 0; t < n_tau; ++t) {
      const double tau = 2.0 * tau_max * t / (n_tau - 1);
      double mean = 0.0, sq = 0.0;
      std::vector<double> values(j_count);
      for (int j = 0; j < j_count; ++j) {
        values[j] = kernels[unit][j](tau);
        mean += values[j];
      }
      mean /= j_count;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double sd = j_count > 1 ? std::sqrt(sq / (j_count - 1)) : 0.0;
      out << unit << ' ' << format_double(tau) << ' ' << format_double(mean)
          << ' ' << format_double(mean - 2 * sd) << ' '
          << format_double(mean + 2 * sd);
      for (double v : values) out << ' ' << format_double(v);
      out << '\n';
    }
  }
  return out.str();
}

std::string prediction_document(const ExperimentConfig& cfg,
                                std::uint64_t run_seed, const PreparedRun& run,
                                const std::vector<PredictiveMixture>& mixtures) {
  const int dims = run.test.dims();
  const int j_count = mixtures[0].j_effective;
  std::string columns = "task";
  for (int d = 0; d < dims; ++d) columns += " x" + std::to_string(d);
  columns += " y_true mean variance lower upper";
  for (int j = 1; j <= j_count; ++j) columns += " m" + std::to_string(j);
  for (int j = 1; j <= j_count; ++j) columns += " v" + std::to_string(j);

  std::ostringstream out;
  out << document_header(cfg, run_seed, columns);
  const std::vector<TaskData> orig_tasks = run.test_orig.tasks();
  for (std::size_t t = 0; t < mixtures.size(); ++t) {
    const PredictiveMixture& mix = mixtures[t];
    const TaskData& test_orig = orig_tasks[t];
    const double sd = run.y_sd, mu = run.y_mean;
    for (Eigen::Index i = 0; i < mix.mean.size(); ++i) {
      out << t;
      for (int d = 0; d < dims; ++d)
        out << ' ' << format_double(test_orig.inputs(i, d));
      out << ' ' << format_double(test_orig.targets[i]) << ' '
          << format_double(mix.mean[i] * sd + mu) << ' '
          << format_double(mix.variance[i] * sd * sd) << ' '
          << format_double(mix.lower[i] * sd + mu) << ' '
          << format_double(mix.upper[i] * sd + mu);
      for (int j = 0; j < mix.j_effective; ++j)
        out << ' ' << format_double(mix.components[j].mean[i] * sd + mu);
      for (int j = 0; j < mix.j_effective; ++j)
        out << ' '
            << format_double(mix.component_variance(j, i) * sd * sd);
      out << '\n';
    }
  }
  return out.str();
}

json checkpoint_document(const ExperimentConfig& cfg, std::uint64_t run_seed,
                         const PreparedRun& run, const FittedModel& model) {
  json grids = json::array();
  for (const FrequencyGrid& g : model.grids)
    grids.push_back({{"delta_omega", g.delta_omega},
                     {"count", g.count()},
                     {"period", g.period}});
  json samples = json::array();
  for (const auto& unit : model.latent_samples) {
    json unit_samples = json::array();
    for (const LatentSample& g : unit)
      unit_samples.push_back(std::vector<double>(g.begin(), g.end()));
    samples.push_back(std::move(unit_samples));
  }
  return json{{"config", cfg.echo},
              {"seed", run_seed},
              {"mode", mode_name(model.mode)},
              {"hyperparameters", model.hp.to_kv()},
              {"grids", std::move(grids)},
              {"latent_samples", std::move(samples)},
              {"target_transform",
               {{"mean", run.y_mean}, {"sd", run.y_sd}}}};
}

struct RunResult {
  FittedModel model;
  std::vector<PredictiveMixture> mixtures;
  json metrics;
};

RunResult execute(const ExperimentConfig& cfg, const PreparedRun& run,
                  std::uint64_t run_seed) {
  RunResult result;
  result.model = fit_for_mode(cfg, run, run_seed);

  PooledPrediction pool;
  for (std::size_t t = 0; t < run.test_tasks.size(); ++t) {
    PredictiveMixture mix =
        predict(result.model, run.test_tasks[t].inputs, true,
                static_cast<int>(t));
    pool_mixture(mix, run.test_tasks[t].targets, &pool);
    result.mixtures.push_back(std::move(mix));
  }
  const MetricValues std_metrics =
      metrics_from_pool(pool, run.train_mean, run.train_var);
  const MetricValues orig_metrics =
      to_original_units(std_metrics, run.y_sd, pool.y.size());

  int j_effective = result.mixtures[0].j_effective;
  for (const PredictiveMixture& m : result.mixtures)
    j_effective = std::min(j_effective, m.j_effective);

  json models;
  json fkl_entry = metrics_to_json(orig_metrics);
  fkl_entry["standardized"] = metrics_to_json(std_metrics);
  fkl_entry["j_effective"] = j_effective;
  models["fkl"] = std::move(fkl_entry);

  for (std::size_t b = 0; b < cfg.baselines.size(); ++b) {
    BaselineConfig opts = cfg.baseline_options;
    opts.seed = run_seed;
    PooledPrediction bpool;
    // baselines fit each task independently
    for (std::size_t t = 0; t < run.train_tasks.size(); ++t) {
      BaselineModel bm =
          fit_baseline(cfg.baselines[b], run.train_tasks[t].inputs,
                       run.train_tasks[t].targets, opts);
      const PredictiveMixture mix = bm.predictive(run.test_tasks[t].inputs);
      pool_mixture(mix, run.test_tasks[t].targets, &bpool);
    }
    const MetricValues bstd = metrics_from_pool(bpool, run.train_mean,
                                                run.train_var);
    json entry = metrics_to_json(to_original_units(bstd, run.y_sd,
                                                   bpool.y.size()));
    entry["standardized"] = metrics_to_json(bstd);
    models[baseline_name(cfg.baselines[b])] = std::move(entry);
  }

  const FitDiagnostics& d = result.model.diagnostics;
  result.metrics = json{
      {"config", cfg.echo},
      {"seed", run_seed},
      {"models", std::move(models)},
      {"diagnostics",
       {{"initial_loss", d.initial_loss},
        {"final_loss", d.final_loss},
        {"optimizer_steps", d.optimizer_steps},
        {"ess_transitions_per_unit", d.ess_transitions_per_unit},
        {"posterior_draw_transitions", d.posterior_draw_transitions},
        {"likelihood_evals", d.likelihood_evals},
        {"mean_ess_move_distance", d.mean_ess_move_distance}}}};
  return result;
}

RunArtifacts write_artifacts(const ExperimentConfig& cfg,
                             std::uint64_t run_seed, const PreparedRun& run,
                             const RunResult& result,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RunArtifacts artifacts;
  artifacts.checkpoint = dir / "checkpoint.json";
  artifacts.metrics = dir / "metrics.json";
  artifacts.predictions = dir / "predictions.tsv";
  artifacts.spectrum = dir / "spectrum.tsv";
  artifacts.kernel = dir / "kernel.tsv";

  atomic_write(artifacts.checkpoint,
               checkpoint_document(cfg, run_seed, run, result.model).dump(2) +
                   "\n");
  atomic_write(artifacts.metrics, result.metrics.dump(2) + "\n");
  atomic_write(artifacts.predictions,
               prediction_document(cfg, run_seed, run, result.mixtures));
  atomic_write(artifacts.spectrum,
               spectrum_document(cfg, run_seed, result.model));
  atomic_write(artifacts.kernel, kernel_document(cfg, run_seed, result.model));
  return artifacts;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config) {
  const PreparedRun run = prepare(config, config.seed);
  validate_mode(config, run);
  const RunResult result = execute(config, run, config.seed);
  return write_artifacts(config, config.seed, run, result,
                         resolve_output_dir(config.output_dir));
}

std::filesystem::path run_splits(const ExperimentConfig& config, int n_splits) {
  if (n_splits < 1) throw ConfigError("splits: need n >= 1");
  if (config.split.kind != SplitScheme::Kind::random_fraction)
    throw ConfigError("splits: the split scheme must be random_fraction");

  const std::filesystem::path dir = resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(dir);

  std::vector<json> split_metrics;
  for (int i = 0; i < n_splits; ++i) {
    // consecutive seeds hash to independent streams; split 0 reproduces a
    // plain run_experiment of the same config
    const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(i);
    const PreparedRun run = prepare(config, run_seed);
    validate_mode(config, run);
    const RunResult result = execute(config, run, run_seed);
    char name[32];
    std::snprintf(name, sizeof(name), "split_%02d", i);
    write_artifacts(config, run_seed, run, result, dir / name);
    split_metrics.push_back(result.metrics);
  }

  // aggregate mean and sample std per metric per model
  const char* metric_names[] = {"rmse", "smse", "msll", "nll",
                                "msll_gaussian", "nll_gaussian"};
  json models;
  for (auto it = split_metrics[0]["models"].begin();
       it != split_metrics[0]["models"].end(); ++it) {
    json entry;
    for (const char* metric : metric_names) {
      std::vector<double> values;
      for (const json& sm : split_metrics)
        values.push_back(sm["models"][it.key()][metric].get<double>());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= values.size();
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double stddev =
          values.size() > 1 ? std::sqrt(sq / (values.size() - 1.0)) : 0.0;
      entry[metric] = {{"mean", mean}, {"std", stddev}, {"per_split", values}};
    }
    models[it.key()] = std::move(entry);
  }
  const json aggregate{{"config", config.echo},
                       {"seed", config.seed},
                       {"n_splits", n_splits},
                       {"models", std::move(models)}};
  atomic_write(dir / "metrics.json", aggregate.dump(2) + "\n");
  return dir / "metrics.json";
}

RunArtifacts emit_plot_data(const std::filesystem::path& run_dir) {
  const std::filesystem::path checkpoint_path = run_dir / "checkpoint.json";
  std::ifstream in(checkpoint_path);
  if (!in) throw IoError("cannot open " + checkpoint_path.string());
  json checkpoint;
  try {
    in >> checkpoint;
  } catch (const json::parse_error& e) {
    throw ParseError(checkpoint_path.string() + ": " + e.what());
  }

  const ExperimentConfig cfg = parse_config(checkpoint.at("config"));
  const std::uint64_t run_seed = checkpoint.at("seed").get<std::uint64_t>();
  const PreparedRun run = prepare(cfg, run_seed);

  FittedModel model;
  model.mode = parse_mode(checkpoint.at("mode").get<std::string>());
  model.config = cfg.train;
  std::map<std::string, double> kv;
  for (auto it = checkpoint.at("hyperparameters").begin();
       it != checkpoint.at("hyperparameters").end(); ++it)
    kv[it.key()] = it.value().get<double>();
  model.hp = HyperParams::from_kv(kv);
  for (const json& g : checkpoint.at("grids")) {
    FrequencyGrid grid = make_grid(g.at("delta_omega").get<double>(),
                                   g.at("count").get<int>());
    grid.period = g.at("period").get<double>();
    model.grids.push_back(std::move(grid));
  }
  for (const json& unit : checkpoint.at("latent_samples")) {
    std::vector<LatentSample> samples;
    for (const json& s : unit) {
      const std::vector<double> values = s.get<std::vector<double>>();
      samples.push_back(
          Eigen::Map<const Vector>(values.data(), values.size()));
    }
    model.latent_samples.push_back(std::move(samples));
  }
  model.data = run.train_tasks;

  std::vector<PredictiveMixture> mixtures;
  for (std::size_t t = 0; t < run.test_tasks.size(); ++t)
    mixtures.push_back(predict(model, run.test_tasks[t].inputs, true,
                               static_cast<int>(t)));

  RunArtifacts artifacts;
  artifacts.checkpoint = checkpoint_path;
  artifacts.metrics = run_dir / "metrics.json";
  artifacts.predictions = run_dir / "predictions.tsv";
  artifacts.spectrum = run_dir / "spectrum.tsv";
  artifacts.kernel = run_dir / "kernel.tsv";
  atomic_write(artifacts.predictions,
               prediction_document(cfg, run_seed, run, mixtures));
  atomic_write(artifacts.spectrum, spectrum_document(cfg, run_seed, model));
  atomic_write(artifacts.kernel, kernel_document(cfg, run_seed, model));
  return artifacts;
}

}  // namespace fkl
