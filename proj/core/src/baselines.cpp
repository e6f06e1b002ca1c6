#include "fkl/baselines.hpp"

#include <cmath>
#include <limits>

#include "fkl/errors.hpp"
#include "fkl/gp_math.hpp"
#include "fkl/inference.hpp"
#include "fkl/latent_model.hpp"
#include "fkl/rng.hpp"

namespace fkl {

namespace {
constexpr double kPi = 3.141592653589793;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kSqrt5 = 2.23606797749979;

// raw layout: [gamma0, noise, outputscale, lengthscales...] for the
// distance kernels; [gamma0, noise, w..., mu..., sigma...] for sm.
int lengthscale_count(BaselineKind kind, int dims) {
  return (kind == BaselineKind::ard || kind == BaselineKind::ard_matern) ? dims
                                                                         : 1;
}
}  // namespace

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "rbf") return BaselineKind::rbf;
  if (name == "matern") return BaselineKind::matern;
  if (name == "ard") return BaselineKind::ard;
  if (name == "ard_matern") return BaselineKind::ard_matern;
  if (name == "sm") return BaselineKind::sm;
  throw ConfigError("unknown baseline '" + name + "'");
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::rbf: return "rbf";
    case BaselineKind::matern: return "matern";
    case BaselineKind::ard: return "ard";
    case BaselineKind::ard_matern: return "ard_matern";
    case BaselineKind::sm: return "sm";
  }
  return "?";
}

double BaselineModel::noise_variance() const { return softplus(raw[1]); }

double BaselineModel::kernel(const Vector& a, const Vector& b) const {
  if (kind == BaselineKind::sm) {
    const double tau = std::abs(a[0] - b[0]);
    const int q_count = sm_components;
    double k = 0.0;
    for (int q = 0; q < q_count; ++q) {
      const double w = softplus(raw[2 + q]);
      const double mu = softplus(raw[2 + q_count + q]);
      const double sigma = softplus(raw[2 + 2 * q_count + q]);
      k += w * std::exp(-2.0 * kPi * kPi * sigma * sigma * tau * tau) *
           std::cos(kTwoPi * mu * tau);
    }
    return k;
  }

  const double outputscale = softplus(raw[2]);
  const int n_ls = lengthscale_count(kind, dims);
  double r2 = 0.0;
  for (int d = 0; d < dims; ++d) {
    const double ls = softplus(raw[3 + (n_ls == 1 ? 0 : d)]);
    const double z = (a[d] - b[d]) / ls;
    r2 += z * z;
  }
  if (kind == BaselineKind::rbf || kind == BaselineKind::ard)
    return outputscale * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);  // Matern-5/2
  return outputscale * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) *
         std::exp(-kSqrt5 * r);
}

namespace {

Matrix baseline_gram(const BaselineModel& model, const Matrix& X,
                     const Matrix& X2) {
  Matrix K(X.rows(), X2.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X2.rows(); ++j)
      K(i, j) = model.kernel(X.row(i), X2.row(j));
  if (&X == &X2) K = 0.5 * (K + K.transpose()).eval();
  return K;
}

double guarded_nll(const BaselineModel& model) {
  try {
    return -model.log_marginal_likelihood();
  } catch (const NotPositiveDefinite&) {
    return 1e12;  // steer the optimizer away instead of aborting
  }
}

}  // namespace

double BaselineModel::log_marginal_likelihood() const {
  const Matrix K = baseline_gram(*this, train_x, train_x);
  return log_marginal(train_y, mean_const(), K, noise_variance());
}

PredictiveMixture BaselineModel::predictive(const Matrix& test_x,
                                            bool observation_noise) const {
  const Matrix Kxx = baseline_gram(*this, train_x, train_x);
  const Matrix Ksx = baseline_gram(*this, test_x, train_x);
  const Matrix Kss = baseline_gram(*this, test_x, test_x);

  PredictiveMixture mixture;
  mixture.test_inputs = test_x;
  mixture.components.push_back(posterior_from_grams(
      Kxx, Ksx, Kss, train_y, mean_const(), noise_variance()));
  mixture.j_requested = 1;
  mixture.j_effective = 1;
  mixture.includes_noise = observation_noise;
  mixture.noise_variance = noise_variance();
  std::tie(mixture.mean, mixture.variance) = mixture_moments(
      mixture.components, observation_noise ? noise_variance() : 0.0);
  std::tie(mixture.lower, mixture.upper) =
      credible_band(mixture.mean, mixture.variance);
  return mixture;
}

BaselineModel fit_baseline(BaselineKind kind, const Matrix& X, const Vector& y,
                           const BaselineConfig& config) {
  if (kind == BaselineKind::sm && X.cols() != 1)
    throw ConfigError("the sm baseline supports 1-d inputs only");

  BaselineModel model;
  model.kind = kind;
  model.dims = static_cast<int>(X.cols());
  model.train_x = X;
  model.train_y = y;

  const double y_var =
      std::max((y.array() - y.mean()).square().mean(), 1e-12);

  if (kind == BaselineKind::sm) {
    const int q_count = config.sm_components;
    model.sm_components = q_count;
    model.raw.resize(2 + 3 * q_count);
    model.raw[0] = y.mean();
    model.raw[1] = softplus_inverse(0.1 * y_var);
    if (config.sm_data_init) {
      // statistics-based random init: means up to the Nyquist-like limit of
      // the smallest input gap, widths scaled by the input range
      Vector x = X.col(0);
      std::sort(x.begin(), x.end());
      double min_gap = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 1; i < x.size(); ++i)
        if (x[i] - x[i - 1] > 0) min_gap = std::min(min_gap, x[i] - x[i - 1]);
      const double range = std::max(x[x.size() - 1] - x[0], 1e-12);
      if (!std::isfinite(min_gap)) min_gap = range;
      Rng rng = Rng(config.seed).stream(11);
      for (int q = 0; q < q_count; ++q) {
        model.raw[2 + q] = softplus_inverse(y_var / q_count);
        model.raw[2 + q_count + q] =
            softplus_inverse(rng.uniform(1e-4, 0.5 / min_gap));
        model.raw[2 + 2 * q_count + q] =
            softplus_inverse(std::abs(rng.normal()) / (2.0 * range) + 1e-4);
      }
    } else {
      for (int q = 0; q < 3 * q_count; ++q) model.raw[2 + q] = 0.0;
    }
  } else {
    model.raw.resize(3 + lengthscale_count(kind, model.dims));
    model.raw[0] = y.mean();
    model.raw[1] = softplus_inverse(0.1 * y_var);
    model.raw[2] = softplus_inverse(y_var);
    for (Eigen::Index i = 3; i < model.raw.size(); ++i) model.raw[i] = 0.0;
  }

  Vector raw = model.raw;
  OptState opt = OptState::init(raw.size(), config.learning_rate);
  for (int step = 0; step < config.steps; ++step) {
    const Vector grad = fd_gradient(raw, [&](const Vector& probe) {
      BaselineModel candidate = model;
      candidate.raw = probe;
      return guarded_nll(candidate);
    });
    amsgrad_step(raw, grad, opt);
  }
  model.raw = raw;
  return model;
}

}  // namespace fkl
