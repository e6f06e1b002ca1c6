#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fkl/gp_math.hpp"
#include "fkl/predict.hpp"
#include "fkl/trainer.hpp"
#include "fkl/types.hpp"

namespace fkl {

/// Per-column affine standardization record; constant columns keep std 1 so
/// the transform stays invertible.
struct Standardizer {
  Vector mean;
  Vector stddev;

  static Standardizer fit(const Matrix& values);
  Matrix apply(const Matrix& values) const;
  Matrix invert(const Matrix& values) const;
};

struct Dataset {
  Matrix inputs;   // n x D
  Vector targets;  // n
  std::vector<int> task_ids;  // one per row when a task column is present
  std::string provenance;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dims() const { return static_cast<int>(inputs.cols()); }
  bool has_tasks() const { return !task_ids.empty(); }

  /// Rows grouped by task id (ascending); single-task data yields one group.
  std::vector<TaskData> tasks() const;
};

/// Spectral mixture kernel sum_q w_q exp(-2 pi^2 s_q^2 tau^2) cos(2 pi m_q tau).
double sm_kernel(double tau, const std::vector<double>& weights,
                 const std::vector<double>& means,
                 const std::vector<double>& stds);

/// exp(-tau^2 / (2 l^2)) * exp(-2 sin^2(pi tau f)).
double quasi_periodic_kernel(double tau, double lengthscale, double freq);

/// sinc(x+10) + sinc(x) + sinc(x-10) with sinc(x) = sin(pi x)/(pi x),
/// sinc(0) = 1 by continuous extension.
double sinc3(double x);

/// Exact draw from a zero-mean GP at the given 1-d inputs.
Vector gp_draw(const StationaryKernel& kernel, const Vector& x,
               std::uint64_t seed);

/// 150 inputs uniform on (-7, 7), targets drawn from a zero-mean GP with the
/// two-component spectral mixture kernel (weights 1 and 0.5, means 0.2 and
/// 0.9, stds 0.05).
Dataset gen_spectral_mixture(std::uint64_t seed);

/// Kernel parameters of gen_spectral_mixture, exposed for oracles.
struct SmGroundTruth {
  std::vector<double> weights{1.0, 0.5};
  std::vector<double> means{0.2, 0.9};
  std::vector<double> stds{0.05, 0.05};
  double operator()(double tau) const {
    return sm_kernel(tau, weights, means, stds);
  }
};

/// Zero-mean GP draw under the quasi-periodic kernel on n evenly spaced
/// inputs over [-7, 7].
Dataset gen_quasi_periodic(std::uint64_t seed, double lengthscale, double freq,
                           int n = 150);

/// The three-sinc pattern on n evenly spaced inputs; noise_std = 0 gives the
/// deterministic function values.
Dataset gen_sinc(int n = 120, double lo = -15.0, double hi = 15.0,
                 double noise_std = 0.01, std::uint64_t seed = 0);

struct CsvSchema {
  std::vector<std::string> input_columns;
  std::string target_column;
  std::optional<std::string> task_column;
};

/// Comma-separated file with a header row naming columns. Throws ParseError
/// with the offending line and column, NonFiniteEntry on NaN/inf values.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

struct SplitScheme {
  enum class Kind { random_fraction, extrapolate_tail, holdout_band };
  Kind kind = Kind::random_fraction;
  double fraction = 0.9;
  std::uint64_t seed = 0;
  int tail = 0;
  double lo = 0.0;
  double hi = 0.0;

  static SplitScheme random_fraction(double fraction, std::uint64_t seed);
  static SplitScheme extrapolate_tail(int tail);
  static SplitScheme holdout_band(double lo, double hi);
};

/// Disjoint, exhaustive (train, test) partition; deterministic given the
/// scheme seed. Task-structured datasets are split within each task.
/// holdout_band tests rows whose first input lies in [lo, hi].
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitScheme& scheme);

/// Point and density metrics of a predictive mixture against test targets.
/// nll/msll integrate the per-point mixture marginals; the _gaussian
/// variants use the moment-matched Gaussian summary instead. msll is
/// relative to the trivial Gaussian N(train_mean, train_var).
struct MetricValues {
  double rmse = 0.0;
  double smse = 0.0;
  double msll = 0.0;
  double nll = 0.0;
  double msll_gaussian = 0.0;
  double nll_gaussian = 0.0;
};

MetricValues metrics(const PredictiveMixture& mixture, const Vector& y_test,
                     double train_mean, double train_var);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over splits
  std::vector<double> per_split;
};

struct MetricReport {
  MetricSummary rmse, smse, msll, nll, msll_gaussian, nll_gaussian;
};

MetricReport aggregate(const std::vector<MetricValues>& per_split);

}  // namespace fkl
