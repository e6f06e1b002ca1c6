#include "fkl/predict.hpp"

#include <cmath>
#include <limits>

#include "fkl/errors.hpp"
#include "fkl/inference.hpp"

namespace fkl {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
}

double PredictiveMixture::log_density(Eigen::Index i, double y) const {
  const int j_count = static_cast<int>(components.size());
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(j_count);
  for (int j = 0; j < j_count; ++j) {
    const double v = component_variance(j, i);
    const double r = y - components[j].mean[i];
    terms[j] = -0.5 * (r * r / v + std::log(v) + kLog2Pi);
    max_term = std::max(max_term, terms[j]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum) - std::log(double(j_count));
}

std::pair<Vector, Vector> mixture_moments(
    const std::vector<GaussianPosterior>& components, double added_variance) {
  const int j_count = static_cast<int>(components.size());
  const Eigen::Index n = components[0].mean.size();
  Vector mean = Vector::Zero(n);
  for (const GaussianPosterior& c : components) mean += c.mean;
  mean /= double(j_count);

  Vector var = Vector::Zero(n);
  for (const GaussianPosterior& c : components) {
    var += c.covariance.diagonal();
    var.array() += added_variance;
    var += (c.mean - mean).cwiseAbs2();
  }
  var /= double(j_count);
  return {std::move(mean), std::move(var)};
}

std::pair<Vector, Vector> credible_band(const Vector& mean,
                                        const Vector& variance,
                                        double width_std) {
  const Vector half = width_std * variance.cwiseSqrt();
  return {mean - half, mean + half};
}

PredictiveMixture predict(const FittedModel& model, const Matrix& test_x,
                          bool observation_noise, int task) {
  if (!test_x.allFinite()) throw DegenerateInputs("non-finite test inputs");
  const auto kernels = posterior_kernels(model);
  const bool multi_task = (model.mode == FitMode::multi_task);
  const TaskData& train = model.data[multi_task ? task : 0];
  const double gamma0 = model.hp.data_mean[multi_task ? task : 0];
  const double noise = model.hp.noise_variance(multi_task ? task : 0);
  const int j_count = static_cast<int>(kernels[0].size());

  PredictiveMixture mixture;
  mixture.test_inputs = test_x;
  mixture.j_requested = j_count;
  mixture.includes_noise = observation_noise;
  mixture.noise_variance = noise;

  for (int j = 0; j < j_count; ++j) {
    std::vector<SpectralKernel> ks;
    if (multi_task) {
      ks.push_back(kernels[task][j]);
    } else {
      for (int d = 0; d < model.units(); ++d) ks.push_back(kernels[d][j]);
    }
    try {
      const Matrix Kxx = product_gram(ks, train.inputs, train.inputs);
      const Matrix Ksx = product_gram(ks, test_x, train.inputs);
      const Matrix Kss = product_gram(ks, test_x, test_x);
      mixture.components.push_back(
          posterior_from_grams(Kxx, Ksx, Kss, train.targets, gamma0, noise));
    } catch (const NotPositiveDefinite&) {
      // a single bad draw should not void the run; drop it
    }
  }
  mixture.j_effective = static_cast<int>(mixture.components.size());
  if (mixture.j_effective == 0)
    throw NotPositiveDefinite("every predictive component failed factorization");

  std::tie(mixture.mean, mixture.variance) =
      mixture_moments(mixture.components, observation_noise ? noise : 0.0);
  std::tie(mixture.lower, mixture.upper) =
      credible_band(mixture.mean, mixture.variance);
  return mixture;
}

double mixture_quantile(const PredictiveMixture& mixture, Eigen::Index point,
                        double prob) {
  const int j_count = static_cast<int>(mixture.components.size());
  const auto cdf = [&](double t) {
    double acc = 0.0;
    for (int j = 0; j < j_count; ++j) {
      const double sd = std::sqrt(mixture.component_variance(j, point));
      acc += normal_cdf((t - mixture.components[j].mean[point]) / sd);
    }
    return acc / double(j_count);
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double max_sd = 0.0;
  for (int j = 0; j < j_count; ++j) {
    const double m = mixture.components[j].mean[point];
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    max_sd = std::max(max_sd, std::sqrt(mixture.component_variance(j, point)));
  }
  lo -= 12.0 * max_sd + 1.0;
  hi += 12.0 * max_sd + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < prob) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fkl
