#include "fkl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fkl/errors.hpp"
#include "fkl/rng.hpp"

namespace fkl {

namespace {
constexpr double kPi = 3.141592653589793;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kLog2Pi = 1.8378770664093453;
}

Standardizer Standardizer::fit(const Matrix& values) {
  Standardizer s;
  const double n = static_cast<double>(values.rows());
  s.mean = values.colwise().mean();
  s.stddev.resize(values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double var =
        (values.col(c).array() - s.mean[c]).square().sum() / std::max(n - 1.0, 1.0);
    const double sd = std::sqrt(var);
    s.stddev[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& values) const {
  return (values.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Matrix Standardizer::invert(const Matrix& values) const {
  return (values.array().rowwise() * stddev.transpose().array()).matrix()
             .rowwise() +
         mean.transpose();
}

std::vector<TaskData> Dataset::tasks() const {
  if (!has_tasks()) return {TaskData{inputs, targets}};
  std::set<int> ids(task_ids.begin(), task_ids.end());
  std::vector<TaskData> out;
  for (int id : ids) {
    std::vector<int> rows;
    for (int i = 0; i < size(); ++i)
      if (task_ids[i] == id) rows.push_back(i);
    TaskData task;
    task.inputs.resize(rows.size(), inputs.cols());
    task.targets.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      task.inputs.row(r) = inputs.row(rows[r]);
      task.targets[r] = targets[rows[r]];
    }
    out.push_back(std::move(task));
  }
  return out;
}

double sm_kernel(double tau, const std::vector<double>& weights,
                 const std::vector<double>& means,
                 const std::vector<double>& stds) {
  double k = 0.0;
  for (std::size_t q = 0; q < weights.size(); ++q) {
    const double s = stds[q];
    k += weights[q] * std::exp(-2.0 * kPi * kPi * s * s * tau * tau) *
         std::cos(kTwoPi * means[q] * tau);
  }
  return k;
}

double quasi_periodic_kernel(double tau, double lengthscale, double freq) {
  const double s = std::sin(kPi * tau * freq);
  return std::exp(-tau * tau / (2.0 * lengthscale * lengthscale)) *
         std::exp(-2.0 * s * s);
}

double sinc3(double x) {
  const auto sinc = [](double v) {
    if (v == 0.0) return 1.0;
    return std::sin(kPi * v) / (kPi * v);
  };
  return sinc(x + 10.0) + sinc(x) + sinc(x - 10.0);
}

Vector gp_draw(const StationaryKernel& kernel, const Vector& x,
               std::uint64_t seed) {
  const Matrix K = gram(kernel, x, x);
  const CholeskyFactor chol = chol_stable(K);
  Rng rng(seed);
  Vector z(x.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol.lower * z;
}

Dataset gen_spectral_mixture(std::uint64_t seed) {
  const SmGroundTruth truth;
  Rng rng = Rng(seed).stream(1);
  Vector x(150);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-7.0, 7.0);
  std::sort(x.begin(), x.end());

  Dataset ds;
  ds.inputs = x;
  ds.targets = gp_draw([&](double tau) { return truth(tau); }, x,
                       Rng(seed).stream(2).next_u64());
  ds.provenance = "gen_spectral_mixture(seed=" + std::to_string(seed) + ")";
  return ds;
}

Dataset gen_quasi_periodic(std::uint64_t seed, double lengthscale, double freq,
                           int n) {
  if (!(lengthscale > 0.0) || !(freq > 0.0))
    throw DegenerateInputs("quasi-periodic kernel needs positive parameters");
  Vector x = Vector::LinSpaced(n, -7.0, 7.0);
  Dataset ds;
  ds.inputs = x;
  ds.targets = gp_draw(
      [&](double tau) { return quasi_periodic_kernel(tau, lengthscale, freq); },
      x, Rng(seed).stream(3).next_u64());
  ds.provenance = "gen_quasi_periodic(seed=" + std::to_string(seed) +
                  ", l=" + std::to_string(lengthscale) +
                  ", f=" + std::to_string(freq) + ")";
  return ds;
}

Dataset gen_sinc(int n, double lo, double hi, double noise_std,
                 std::uint64_t seed) {
  Vector x = Vector::LinSpaced(n, lo, hi);
  Vector y(n);
  Rng rng = Rng(seed).stream(4);
  for (int i = 0; i < n; ++i)
    y[i] = sinc3(x[i]) + (noise_std > 0.0 ? noise_std * rng.normal() : 0.0);
  Dataset ds;
  ds.inputs = x;
  ds.targets = y;
  ds.provenance = "gen_sinc(n=" + std::to_string(n) + ")";
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_field(const std::string& field, int line_no,
                   const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("line " + std::to_string(line_no) + ", column '" + column +
                     "': cannot parse '" + field + "' as a number");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const std::vector<std::string> header = split_fields(line);

  const auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ParseError(path + ": no column named '" + name + "'");
  };

  std::vector<int> input_cols;
  for (const std::string& name : schema.input_columns)
    input_cols.push_back(column_of(name));
  const int target_col = column_of(schema.target_column);
  const int task_col =
      schema.task_column ? column_of(*schema.task_column) : -1;

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::vector<int> tasks;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < input_cols.size(); ++c) {
      const double v = parse_field(fields[input_cols[c]], line_no,
                                   schema.input_columns[c]);
      if (!std::isfinite(v))
        throw NonFiniteEntry("line " + std::to_string(line_no) + ", column '" +
                             schema.input_columns[c] + "': non-finite value");
      row.push_back(v);
    }
    const double y =
        parse_field(fields[target_col], line_no, schema.target_column);
    if (!std::isfinite(y))
      throw NonFiniteEntry("line " + std::to_string(line_no) + ", column '" +
                           schema.target_column + "': non-finite value");
    rows.push_back(std::move(row));
    targets.push_back(y);
    if (task_col >= 0)
      tasks.push_back(static_cast<int>(
          parse_field(fields[task_col], line_no, *schema.task_column)));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Dataset ds;
  ds.inputs.resize(rows.size(), input_cols.size());
  ds.targets.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) ds.inputs(i, c) = rows[i][c];
    ds.targets[i] = targets[i];
  }
  ds.task_ids = std::move(tasks);
  ds.provenance = path;
  return ds;
}

SplitScheme SplitScheme::random_fraction(double fraction, std::uint64_t seed) {
  SplitScheme s;
  s.kind = Kind::random_fraction;
  s.fraction = fraction;
  s.seed = seed;
  return s;
}

SplitScheme SplitScheme::extrapolate_tail(int tail) {
  SplitScheme s;
  s.kind = Kind::extrapolate_tail;
  s.tail = tail;
  return s;
}

SplitScheme SplitScheme::holdout_band(double lo, double hi) {
  SplitScheme s;
  s.kind = Kind::holdout_band;
  s.lo = lo;
  s.hi = hi;
  return s;
}

namespace {

// train/test row indices within one contiguous group
std::pair<std::vector<int>, std::vector<int>> split_rows(
    const Dataset& ds, const std::vector<int>& rows, const SplitScheme& scheme,
    Rng& rng) {
  const int n = static_cast<int>(rows.size());
  std::vector<int> train, test;
  switch (scheme.kind) {
    case SplitScheme::Kind::random_fraction: {
      const int n_train = static_cast<int>(std::floor(scheme.fraction * n));
      std::vector<int> order(rows);
      for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
      train.assign(order.begin(), order.begin() + n_train);
      test.assign(order.begin() + n_train, order.end());
      std::sort(train.begin(), train.end());
      std::sort(test.begin(), test.end());
      break;
    }
    case SplitScheme::Kind::extrapolate_tail: {
      const int n_train = n - scheme.tail;
      for (int i = 0; i < n; ++i)
        (i < n_train ? train : test).push_back(rows[i]);
      break;
    }
    case SplitScheme::Kind::holdout_band: {
      for (int i : rows) {
        const double x = ds.inputs(i, 0);
        (x >= scheme.lo && x <= scheme.hi ? test : train).push_back(i);
      }
      break;
    }
  }
  if (train.empty() || test.empty())
    throw EmptySplit("split left an empty train or test side");
  return {std::move(train), std::move(test)};
}

Dataset take_rows(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.inputs.resize(rows.size(), ds.inputs.cols());
  out.targets.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.inputs.row(r) = ds.inputs.row(rows[r]);
    out.targets[r] = ds.targets[rows[r]];
  }
  if (ds.has_tasks())
    for (int r : rows) out.task_ids.push_back(ds.task_ids[r]);
  out.provenance = ds.provenance;
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitScheme& scheme) {
  Rng rng = Rng(scheme.seed).stream(7);
  std::vector<int> train, test;
  if (ds.has_tasks()) {
    std::set<int> ids(ds.task_ids.begin(), ds.task_ids.end());
    for (int id : ids) {
      std::vector<int> rows;
      for (int i = 0; i < ds.size(); ++i)
        if (ds.task_ids[i] == id) rows.push_back(i);
      auto [tr, te] = split_rows(ds, rows, scheme, rng);
      train.insert(train.end(), tr.begin(), tr.end());
      test.insert(test.end(), te.begin(), te.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
  } else {
    std::vector<int> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::tie(train, test) = split_rows(ds, rows, scheme, rng);
  }
  return {take_rows(ds, train), take_rows(ds, test)};
}

MetricValues metrics(const PredictiveMixture& mixture, const Vector& y_test,
                     double train_mean, double train_var) {
  const Eigen::Index n = y_test.size();
  MetricValues m;
  const Vector err = mixture.mean - y_test;
  const double mse = err.squaredNorm() / double(n);
  m.rmse = std::sqrt(mse);

  const double test_mean = y_test.mean();
  const double test_var = (y_test.array() - test_mean).square().mean();
  if (test_var <= 0.0)
    throw DegenerateVariance("test targets have zero variance; SMSE undefined");
  m.smse = mse / test_var;

  double nll = 0.0, nll_g = 0.0, msll = 0.0, msll_g = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ld = mixture.log_density(i, y_test[i]);
    const double r = y_test[i] - mixture.mean[i];
    const double v = mixture.variance[i];
    const double ld_g = -0.5 * (r * r / v + std::log(v) + kLog2Pi);
    const double r0 = y_test[i] - train_mean;
    const double ld_trivial =
        -0.5 * (r0 * r0 / train_var + std::log(train_var) + kLog2Pi);
    nll -= ld;
    nll_g -= ld_g;
    msll += ld_trivial - ld;
    msll_g += ld_trivial - ld_g;
  }
  m.nll = nll;
  m.nll_gaussian = nll_g;
  m.msll = msll / double(n);
  m.msll_gaussian = msll_g / double(n);
  return m;
}

namespace {
MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.per_split = values;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / (n - 1.0));
  }
  return s;
}
}  // namespace

MetricReport aggregate(const std::vector<MetricValues>& per_split) {
  const auto collect = [&](double MetricValues::* field) {
    std::vector<double> values;
    values.reserve(per_split.size());
    for (const MetricValues& m : per_split) values.push_back(m.*field);
    return summarize(std::move(values));
  };
  MetricReport r;
  r.rmse = collect(&MetricValues::rmse);
  r.smse = collect(&MetricValues::smse);
  r.msll = collect(&MetricValues::msll);
  r.nll = collect(&MetricValues::nll);
  r.msll_gaussian = collect(&MetricValues::msll_gaussian);
  r.nll_gaussian = collect(&MetricValues::nll_gaussian);
  return r;
}

}  // namespace fkl
