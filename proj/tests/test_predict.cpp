#include <doctest.h>

#include <cmath>

#include "fkl/datasets.hpp"
#include "fkl/predict.hpp"
#include "fkl/rng.hpp"
#include "fkl/trainer.hpp"
#include "helpers.hpp"

using namespace fkl;

namespace {

GaussianPosterior make_component(const Vector& mean, const Vector& var) {
  GaussianPosterior c;
  c.mean = mean;
  c.covariance = var.asDiagonal();
  return c;
}

FittedModel tiny_model(std::uint64_t seed = 1) {
  Rng rng = Rng(seed).stream(50);
  Vector x(12);
  for (int i = 0; i < 12; ++i) x[i] = rng.uniform(-3, 3);
  std::sort(x.begin(), x.end());
  const Vector y = gp_draw([](double tau) { return std::exp(-tau * tau); }, x,
                           Rng(seed).stream(51).next_u64());
  TrainConfig cfg;
  cfg.rounds = 2;
  cfg.n_optim = 2;
  cfg.n_ess = 6;
  cfg.j_samples = 5;
  cfg.grid_size = 20;
  cfg.seed = seed;
  return fit({Matrix(x), y}, cfg);
}

}  // namespace

TEST_CASE("mixture_moments: two-component hand arithmetic") {
  const auto c1 = make_component(Vector::Zero(1), Vector::Ones(1));
  const auto c2 = make_component(Vector::Constant(1, 2.0), Vector::Ones(1));
  const auto [mean, var] = mixture_moments({c1, c2});
  CHECK(mean[0] == doctest::Approx(1.0));
  CHECK(var[0] == doctest::Approx(2.0));  // within 1 + between 1
}

TEST_CASE("mixture_moments: invariant to component order") {
  Rng rng(61);
  std::vector<GaussianPosterior> comps;
  for (int j = 0; j < 4; ++j) {
    Vector m(3), v(3);
    for (int i = 0; i < 3; ++i) {
      m[i] = rng.normal();
      v[i] = rng.uniform(0.1, 2.0);
    }
    comps.push_back(make_component(m, v));
  }
  const auto [m1, v1] = mixture_moments(comps);
  std::swap(comps[0], comps[3]);
  std::swap(comps[1], comps[2]);
  const auto [m2, v2] = mixture_moments(comps);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((v1 - v2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mixture_moments: matches the two-pass law of total variance") {
  Rng rng(62);
  std::vector<GaussianPosterior> comps;
  const int j_count = 7;
  for (int j = 0; j < j_count; ++j) {
    Vector m(4), v(4);
    for (int i = 0; i < 4; ++i) {
      m[i] = 3.0 * rng.normal();
      v[i] = rng.uniform(0.01, 4.0);
    }
    comps.push_back(make_component(m, v));
  }
  const auto [mean, var] = mixture_moments(comps);
  for (int i = 0; i < 4; ++i) {
    double within = 0.0, second = 0.0;
    for (const auto& c : comps) {
      within += c.covariance(i, i);
      second += c.mean[i] * c.mean[i];
    }
    within /= j_count;
    second /= j_count;
    const double expected = within + second - mean[i] * mean[i];
    CHECK(var[i] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(var[i] >= within - 1e-12);  // between-component part is nonnegative
  }
}

TEST_CASE("mixture_moments: enumeration oracle over a discrete mixture") {
  // component j puts mass at mean m_j with variance v_j; the mixture moments
  // must match direct expectation over the enumerated components
  std::vector<double> ms{-1.0, 0.5, 2.0};
  std::vector<double> vs{0.3, 1.1, 0.7};
  std::vector<GaussianPosterior> comps;
  for (int j = 0; j < 3; ++j)
    comps.push_back(make_component(Vector::Constant(1, ms[j]),
                                   Vector::Constant(1, vs[j])));
  const auto [mean, var] = mixture_moments(comps);

  double e1 = 0.0, e2 = 0.0;
  for (int j = 0; j < 3; ++j) {
    e1 += ms[j] / 3.0;
    e2 += (vs[j] + ms[j] * ms[j]) / 3.0;
  }
  CHECK(mean[0] == doctest::Approx(e1).epsilon(1e-14));
  CHECK(var[0] == doctest::Approx(e2 - e1 * e1).epsilon(1e-14));
}

TEST_CASE("credible_band: collapses with zero variance or zero width") {
  Vector mean(3), var(3);
  mean << 1, 2, 3;
  var << 0, 0, 0;
  const auto [lo, hi] = credible_band(mean, var);
  CHECK(lo == mean);
  CHECK(hi == mean);

  var << 1, 2, 3;
  const auto [lo0, hi0] = credible_band(mean, var, 0.0);
  CHECK(lo0 == mean);
  CHECK(hi0 == mean);
}

TEST_CASE("predict: J = 1 summary equals the single component") {
  Rng rng(63);
  FittedModel model = tiny_model(4);
  model.latent_samples[0].resize(1);  // keep one posterior draw
  Matrix test_x(3, 1);
  test_x << -1.0, 0.0, 2.0;
  const PredictiveMixture mix = predict(model, test_x, false);
  CHECK(mix.j_effective == 1);
  CHECK((mix.mean - mix.components[0].mean).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((mix.variance - mix.components[0].covariance.diagonal())
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("predict: identical components leave only the within term") {
  FittedModel model = tiny_model(5);
  for (std::size_t j = 1; j < model.latent_samples[0].size(); ++j)
    model.latent_samples[0][j] = model.latent_samples[0][0];
  Matrix test_x(2, 1);
  test_x << 0.3, 1.1;
  const PredictiveMixture mix = predict(model, test_x, false);
  CHECK((mix.variance - mix.components[0].covariance.diagonal())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("predict: observation noise adds exactly the noise variance") {
  const FittedModel model = tiny_model(6);
  Matrix test_x(4, 1);
  test_x << -2.0, -0.5, 0.5, 2.0;
  const PredictiveMixture noisy = predict(model, test_x, true);
  const PredictiveMixture latent = predict(model, test_x, false);
  const double alpha2 = model.hp.noise_variance();
  CHECK((noisy.mean - latent.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK(((noisy.variance - latent.variance).array() - alpha2)
            .abs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("predict: summary moments match Monte Carlo draws") {
  std::vector<GaussianPosterior> comps;
  comps.push_back(make_component(Vector::Constant(1, -0.7),
                                 Vector::Constant(1, 0.4)));
  comps.push_back(make_component(Vector::Constant(1, 1.3),
                                 Vector::Constant(1, 1.9)));
  const auto [mean, var] = mixture_moments(comps);

  Rng rng(64);
  const int draws = 200000;
  double acc = 0.0, acc2 = 0.0;
  for (int d = 0; d < draws; ++d) {
    const int j = static_cast<int>(rng.below(2));
    const double x =
        comps[j].mean[0] + std::sqrt(comps[j].covariance(0, 0)) * rng.normal();
    acc += x;
    acc2 += x * x;
  }
  const double mc_mean = acc / draws;
  const double mc_var = acc2 / draws - mc_mean * mc_mean;
  const double se_mean = std::sqrt(var[0] / draws);
  CHECK(std::abs(mc_mean - mean[0]) < 3.0 * se_mean);
  // rough se for the variance of a mixture
  const double se_var = var[0] * std::sqrt(2.0 / draws) * 2.0;
  CHECK(std::abs(mc_var - var[0]) < 3.0 * se_var);
}

TEST_CASE("predict: moments settle as J grows") {
  Rng rng(65);
  std::vector<GaussianPosterior> comps;
  for (int j = 0; j < 50; ++j)
    comps.push_back(make_component(Vector::Constant(1, 0.5 * rng.normal()),
                                   Vector::Constant(1, 1.0)));
  std::vector<GaussianPosterior> first10(comps.begin(), comps.begin() + 10);
  const auto [m10, v10] = mixture_moments(first10);
  const auto [m50, v50] = mixture_moments(comps);
  CHECK(std::abs(m10[0] - m50[0]) < 0.5);
  CHECK(std::abs(v10[0] - v50[0]) < 0.5);
}

TEST_CASE("mixture log_density: Gaussian case is exact") {
  PredictiveMixture mix;
  mix.components.push_back(make_component(Vector::Constant(1, 0.3),
                                          Vector::Constant(1, 2.0)));
  mix.includes_noise = false;
  const double y = -0.9;
  const double expected =
      -0.5 * ((y - 0.3) * (y - 0.3) / 2.0 + std::log(2.0) +
              std::log(2.0 * 3.141592653589793));
  CHECK(mix.log_density(0, y) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mixture_quantile: recovers Gaussian quantiles and brackets the CDF") {
  PredictiveMixture mix;
  mix.components.push_back(make_component(Vector::Constant(1, 1.5),
                                          Vector::Constant(1, 4.0)));
  mix.includes_noise = false;
  CHECK(mixture_quantile(mix, 0, 0.5) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(mixture_quantile(mix, 0, 0.975) ==
        doctest::Approx(1.5 + 1.959963985 * 2.0).epsilon(1e-6));

  mix.components.push_back(make_component(Vector::Constant(1, -2.0),
                                          Vector::Constant(1, 0.25)));
  const double q = mixture_quantile(mix, 0, 0.8);
  // averaged component CDF at the returned point equals the probability
  const double cdf = 0.5 * (0.5 * std::erfc(-(q - 1.5) / (2.0 * std::sqrt(2.0))) +
                            0.5 * std::erfc(-(q + 2.0) / (0.5 * std::sqrt(2.0))));
  CHECK(cdf == doctest::Approx(0.8).epsilon(1e-6));
}
