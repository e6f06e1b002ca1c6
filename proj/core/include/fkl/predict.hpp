#pragma once

#include <utility>
#include <vector>

#include "fkl/gp_math.hpp"
#include "fkl/trainer.hpp"
#include "fkl/types.hpp"

namespace fkl {

/// Equal-weight mixture of the per-kernel-sample Gaussian posteriors at a
/// set of test inputs, with moment summaries and a +-width_std credible
/// band. Components hold the noise-free latent posterior; when
/// includes_noise is set the summaries and densities add noise_variance to
/// every component variance.
struct PredictiveMixture {
  std::vector<GaussianPosterior> components;
  Matrix test_inputs;
  Vector mean;
  Vector variance;
  Vector lower;
  Vector upper;
  int j_requested = 0;
  int j_effective = 0;
  bool includes_noise = true;
  double noise_variance = 0.0;

  double component_variance(int j, Eigen::Index i) const {
    return components[j].covariance(i, i) +
           (includes_noise ? noise_variance : 0.0);
  }

  /// Marginal mixture log density at test point i for observed value y.
  double log_density(Eigen::Index i, double y) const;
};

/// Laws of total mean and variance over components, elementwise:
///   mean = avg(m_j);  var = avg(v_j + added_variance) + avg((m_j - mean)^2).
std::pair<Vector, Vector> mixture_moments(
    const std::vector<GaussianPosterior>& components,
    double added_variance = 0.0);

/// mean +- width_std * sqrt(var).
std::pair<Vector, Vector> credible_band(const Vector& mean,
                                        const Vector& variance,
                                        double width_std = 2.0);

/// Monte Carlo marginalization of the kernel posterior (Eq. of the J-sample
/// predictive mixture). Components that fail factorization even after jitter
/// escalation are dropped and j_effective reports the survivors; task
/// selects the output for multi-task models.
PredictiveMixture predict(const FittedModel& model, const Matrix& test_x,
                          bool observation_noise = true, int task = 0);

/// Exact mixture quantile at one test point via averaged component CDFs.
double mixture_quantile(const PredictiveMixture& mixture, Eigen::Index point,
                        double prob);

}  // namespace fkl
