#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>

#include "fkl/datasets.hpp"
#include "fkl/errors.hpp"
#include "helpers.hpp"

using namespace fkl;

#ifndef FKL_DATA_DIR
#define FKL_DATA_DIR "data"
#endif

namespace {
const std::string data_dir = FKL_DATA_DIR;

std::string write_temp_csv(const std::string& name, const std::string& body) {
  const std::string path = std::string("/tmp/") + name;
  std::ofstream out(path);
  out << body;
  return path;
}
}  // namespace

TEST_CASE("gen_spectral_mixture: size, kernel scale, reproducibility") {
  const Dataset ds = gen_spectral_mixture(3);
  CHECK(ds.size() == 150);
  CHECK(ds.dims() == 1);
  CHECK((ds.inputs.array() > -7.0).all());
  CHECK((ds.inputs.array() < 7.0).all());

  const SmGroundTruth truth;
  CHECK(truth(0.0) == doctest::Approx(1.5).epsilon(1e-14));

  const Dataset again = gen_spectral_mixture(3);
  CHECK(ds.inputs == again.inputs);
  CHECK(ds.targets == again.targets);
  const Dataset other = gen_spectral_mixture(4);
  CHECK(ds.targets != other.targets);
}

TEST_CASE("gp_draw: replicate covariance matches the generator kernel") {
  const SmGroundTruth truth;
  Vector x(8);
  x << -6.0, -3.5, -1.0, 0.0, 1.2, 2.5, 4.0, 6.5;
  const Matrix K = gram([&](double tau) { return truth(tau); }, x, x);

  const int reps = 2000;
  Matrix draws(reps, 8);
  for (int r = 0; r < reps; ++r)
    draws.row(r) =
        gp_draw([&](double tau) { return truth(tau); }, x, 9000 + r);

  const Matrix emp = draws.transpose() * draws / double(reps);
  for (int i = 0; i < 8; ++i) {
    for (int j = i; j < 8; ++j) {
      const double se =
          std::sqrt((K(i, i) * K(j, j) + K(i, j) * K(i, j)) / reps);
      CHECK(std::abs(emp(i, j) - K(i, j)) < 3.5 * se);
    }
  }
}

TEST_CASE("quasi_periodic_kernel: unit peak and envelope identity") {
  const double l = 2.0, f = 0.5;
  CHECK(quasi_periodic_kernel(0.0, l, f) == 1.0);
  const double period = 1.0 / f;
  for (double tau : {0.1, 0.7, 1.3}) {
    const double ratio = quasi_periodic_kernel(tau + period, l, f) /
                         quasi_periodic_kernel(tau, l, f);
    const double envelope =
        std::exp(-((tau + period) * (tau + period) - tau * tau) / (2 * l * l));
    CHECK(ratio == doctest::Approx(envelope).epsilon(1e-10));
  }
}

TEST_CASE("quasi_periodic_kernel: Fourier transform shows harmonics at multiples of freq") {
  // the kernel is even in tau, so its transform is the cosine transform of
  // the tabulated values; the quasi-periodic factor contributes spectral
  // lines at integer multiples of f
  const double l = 2.0, f = 0.5;
  const int n = 4096;
  const double dt = 0.01;
  std::vector<double> mags;
  std::vector<double> freqs;
  for (double freq = 0.0; freq <= 1.3; freq += 0.0125) {
    double acc = 0.5 * quasi_periodic_kernel(0.0, l, f);
    for (int t = 1; t < n; ++t) {
      const double tau = t * dt;
      acc += quasi_periodic_kernel(tau, l, f) *
             std::cos(2 * 3.141592653589793 * freq * tau);
    }
    freqs.push_back(freq);
    mags.push_back(acc);
  }
  // local maxima should appear within one sweep step of f and 2f
  bool near_f = false, near_2f = false;
  for (std::size_t i = 1; i + 1 < mags.size(); ++i) {
    if (mags[i] > mags[i - 1] && mags[i] > mags[i + 1]) {
      if (std::abs(freqs[i] - f) <= 0.0125) near_f = true;
      if (std::abs(freqs[i] - 2 * f) <= 0.0125) near_2f = true;
    }
  }
  CHECK(near_f);
  CHECK(near_2f);
}

TEST_CASE("gen_quasi_periodic: deterministic draw with finite targets") {
  const Dataset a = gen_quasi_periodic(5, 2.0, 0.5);
  const Dataset b = gen_quasi_periodic(5, 2.0, 0.5);
  CHECK(a.targets == b.targets);
  CHECK(a.targets.allFinite());
  CHECK_THROWS_AS(gen_quasi_periodic(5, -1.0, 0.5), DegenerateInputs);
}

TEST_CASE("sinc3: pinned values") {
  CHECK(sinc3(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sinc3(10.0) == doctest::Approx(sinc3(-10.0)).epsilon(1e-12));
  const auto sinc = [](double v) {
    return v == 0.0 ? 1.0 : std::sin(3.141592653589793 * v) /
                                (3.141592653589793 * v);
  };
  CHECK(sinc3(0.5) ==
        doctest::Approx(sinc(10.5) + sinc(0.5) + sinc(-9.5)).epsilon(1e-12));
}

TEST_CASE("gen_sinc: noiseless targets equal the function") {
  const Dataset ds = gen_sinc(50, -15, 15, 0.0, 1);
  for (int i = 0; i < ds.size(); ++i)
    CHECK(ds.targets[i] == doctest::Approx(sinc3(ds.inputs(i, 0))));
}

TEST_CASE("load_csv: well-formed file") {
  const std::string path = write_temp_csv(
      "fkl_ok.csv", "a,b,y\n1.0,2.0,3.0\n4.0,5.0,6.0\n7.5,8.5,9.5\n");
  const Dataset ds = load_csv(path, CsvSchema{{"a", "b"}, "y", {}});
  CHECK(ds.size() == 3);
  CHECK(ds.dims() == 2);
  CHECK(ds.inputs(2, 1) == 8.5);
  CHECK(ds.targets[2] == 9.5);
}

TEST_CASE("load_csv: NaN target is a NonFiniteEntry with location") {
  const std::string path =
      write_temp_csv("fkl_nan.csv", "x,y\n1.0,2.0\n2.0,NaN\n");
  CHECK_THROWS_WITH_AS(load_csv(path, CsvSchema{{"x"}, "y", {}}),
                       doctest::Contains("line 3"), NonFiniteEntry);
}

TEST_CASE("load_csv: parse errors carry row and column") {
  const std::string path =
      write_temp_csv("fkl_bad.csv", "x,y\n1.0,2.0\noops,3.0\n");
  CHECK_THROWS_WITH_AS(load_csv(path, CsvSchema{{"x"}, "y", {}}),
                       doctest::Contains("column 'x'"), ParseError);
  CHECK_THROWS_AS(load_csv(path, CsvSchema{{"missing"}, "y", {}}), ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent.csv", CsvSchema{{"x"}, "y", {}}),
                  IoError);
}

TEST_CASE("load_csv: airline fixture extrapolation split") {
  const Dataset ds =
      load_csv(data_dir + "/airline.csv", CsvSchema{{"month"}, "passengers", {}});
  CHECK(ds.size() == 144);
  const auto [train, test] = split(ds, SplitScheme::extrapolate_tail(48));
  CHECK(train.size() == 96);
  CHECK(test.size() == 48);
  CHECK(train.inputs(95, 0) == 96.0);
  CHECK(test.inputs(0, 0) == 97.0);
}

TEST_CASE("load_csv: task column grouping") {
  const Dataset ds = load_csv(
      data_dir + "/precipitation_synthetic.csv",
      CsvSchema{{"day"}, "precip", std::optional<std::string>("site")});
  CHECK(ds.has_tasks());
  const auto tasks = ds.tasks();
  CHECK(tasks.size() == 3);
  CHECK(tasks[0].inputs.rows() + tasks[1].inputs.rows() +
            tasks[2].inputs.rows() ==
        ds.size());
}

TEST_CASE("split: random fraction is exact, disjoint, deterministic") {
  Dataset ds;
  ds.inputs = Vector::LinSpaced(100, 0, 99);
  ds.targets = Vector::LinSpaced(100, 0, 99);
  const auto [train, test] = split(ds, SplitScheme::random_fraction(0.9, 7));
  CHECK(train.size() == 90);
  CHECK(test.size() == 10);

  std::vector<bool> seen(100, false);
  for (int i = 0; i < train.size(); ++i) seen[int(train.targets[i])] = true;
  for (int i = 0; i < test.size(); ++i) {
    CHECK(!seen[int(test.targets[i])]);
    seen[int(test.targets[i])] = true;
  }
  for (bool s : seen) CHECK(s);

  const auto [train2, test2] = split(ds, SplitScheme::random_fraction(0.9, 7));
  CHECK(train.targets == train2.targets);
  const auto [train3, test3] = split(ds, SplitScheme::random_fraction(0.9, 8));
  CHECK(train.targets != train3.targets);
}

TEST_CASE("split: holdout band and empty-split errors") {
  Dataset ds;
  ds.inputs = Vector::LinSpaced(50, -5, 5);
  ds.targets = Vector::Zero(50);
  const auto [train, test] = split(ds, SplitScheme::holdout_band(-1, 1));
  for (int i = 0; i < test.size(); ++i) {
    CHECK(test.inputs(i, 0) >= -1);
    CHECK(test.inputs(i, 0) <= 1);
  }
  CHECK_THROWS_AS(split(ds, SplitScheme::holdout_band(100, 200)), EmptySplit);
  CHECK_THROWS_AS(split(ds, SplitScheme::extrapolate_tail(0)), EmptySplit);
  CHECK_THROWS_AS(split(ds, SplitScheme::extrapolate_tail(50)), EmptySplit);
}

TEST_CASE("standardizer: invertible round trip, constant columns safe") {
  Rng rng(83);
  Matrix values(20, 3);
  for (int i = 0; i < 20; ++i) {
    values(i, 0) = rng.normal() * 3 + 7;
    values(i, 1) = rng.uniform(-2, 2);
    values(i, 2) = 42.0;  // constant
  }
  const Standardizer s = Standardizer::fit(values);
  CHECK(s.stddev[2] == 1.0);
  const Matrix round = s.invert(s.apply(values));
  CHECK((round - values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(s.apply(values).col(0).mean()) < 1e-12);
}

namespace {
PredictiveMixture gaussian_mixture(const Vector& mean, const Vector& var) {
  PredictiveMixture mix;
  GaussianPosterior c;
  c.mean = mean;
  c.covariance = var.asDiagonal();
  mix.components.push_back(c);
  mix.mean = mean;
  mix.variance = var;
  mix.includes_noise = false;
  mix.j_requested = mix.j_effective = 1;
  return mix;
}
}  // namespace

TEST_CASE("metrics: perfect predictions and the trivial predictor") {
  Vector y(4);
  y << 1.0, -1.0, 0.5, 2.0;
  const MetricValues perfect =
      metrics(gaussian_mixture(y, Vector::Constant(4, 0.1)), y, 0.0, 1.0);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.smse == 0.0);

  const double train_mean = 0.4, train_var = 2.3;
  const MetricValues trivial = metrics(
      gaussian_mixture(Vector::Constant(4, train_mean),
                       Vector::Constant(4, train_var)),
      y, train_mean, train_var);
  CHECK(trivial.msll == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("metrics: two-point closed form") {
  Vector y(2), mean(2), var(2);
  y << 1.0, 2.0;
  mean << 0.5, 2.5;
  var << 0.8, 1.2;
  const MetricValues m = metrics(gaussian_mixture(mean, var), y, 1.5, 0.25);
  CHECK(m.rmse == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.smse == doctest::Approx(0.25 / 0.25).epsilon(1e-12));

  const double log2pi = std::log(2 * 3.141592653589793);
  const double ld0 = -0.5 * (0.25 / 0.8 + std::log(0.8) + log2pi);
  const double ld1 = -0.5 * (0.25 / 1.2 + std::log(1.2) + log2pi);
  CHECK(m.nll == doctest::Approx(-(ld0 + ld1)).epsilon(1e-12));
  const double t0 = -0.5 * (0.25 / 0.25 + std::log(0.25) + log2pi);
  const double t1 = -0.5 * (0.25 / 0.25 + std::log(0.25) + log2pi);
  CHECK(m.msll ==
        doctest::Approx(((t0 - ld0) + (t1 - ld1)) / 2.0).epsilon(1e-12));
}

TEST_CASE("metrics: zero test variance raises DegenerateVariance") {
  Vector y = Vector::Constant(3, 1.0);
  CHECK_THROWS_AS(metrics(gaussian_mixture(y, Vector::Ones(3)), y, 0.0, 1.0),
                  DegenerateVariance);
}

TEST_CASE("metrics: rmse scales with the target sd, smse is invariant") {
  Rng rng(85);
  const double sd = 3.7, mu = -4.0;
  Vector y_std(6), mean_std(6), var_std(6);
  for (int i = 0; i < 6; ++i) {
    y_std[i] = rng.normal();
    mean_std[i] = rng.normal();
    var_std[i] = rng.uniform(0.2, 2.0);
  }
  const MetricValues in_std =
      metrics(gaussian_mixture(mean_std, var_std), y_std, 0.0, 1.0);
  const Vector y = (y_std.array() * sd + mu).matrix();
  const Vector mean = (mean_std.array() * sd + mu).matrix();
  const Vector var = (var_std.array() * sd * sd).matrix();
  const MetricValues in_orig =
      metrics(gaussian_mixture(mean, var), y, mu, sd * sd);
  CHECK(in_orig.rmse == doctest::Approx(in_std.rmse * sd).epsilon(1e-12));
  CHECK(in_orig.smse == doctest::Approx(in_std.smse).epsilon(1e-12));
  CHECK(in_orig.msll == doctest::Approx(in_std.msll).epsilon(1e-10));
  CHECK(in_orig.nll ==
        doctest::Approx(in_std.nll + 6.0 * std::log(sd)).epsilon(1e-10));
}

TEST_CASE("aggregate: mean and sample standard deviation") {
  std::vector<MetricValues> values(3);
  values[0].rmse = 1.0;
  values[1].rmse = 2.0;
  values[2].rmse = 3.0;
  const MetricReport report = aggregate(values);
  CHECK(report.rmse.mean == doctest::Approx(2.0));
  CHECK(report.rmse.stddev == doctest::Approx(1.0));
  CHECK(report.rmse.per_split.size() == 3);
}
