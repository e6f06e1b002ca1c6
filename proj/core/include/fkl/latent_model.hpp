#pragma once

#include <map>
#include <string>
#include <vector>

#include "fkl/spectral.hpp"
#include "fkl/types.hpp"

namespace fkl {

/// theta_tilde = log(exp(raw) + 1); strictly positive, stable for large |raw|.
double softplus(double raw);

/// Inverse of softplus; round-trips raw values in [-20, 20] to 1e-9.
double softplus_inverse(double value);

/// Hyperparameters of one latent GP over the log-spectral density:
/// negative-quadratic mean mu(w) = mean_offset - w^2 / (2 width^2) and a
/// Matern-3/2 covariance with a diagonal jitter term. Positive quantities
/// are stored raw and passed through softplus.
struct LatentTheta {
  double mean_offset = 0.0;
  double mean_width_raw = 0.0;
  double lengthscale_raw = 0.0;
  double jitter_raw = 0.0;
  double outputscale_raw = 0.0;

  double mean_width() const { return softplus(mean_width_raw); }
  double lengthscale() const { return softplus(lengthscale_raw); }
  double jitter() const { return softplus(jitter_raw); }
  double outputscale() const { return softplus(outputscale_raw); }
};

/// All raw hyperparameters phi = {theta (latent), gamma (data)}. Single-task
/// single-dimension models hold one theta block and one data mean; separate
/// multi-input mode holds one theta per dimension; multi-task mode holds one
/// data mean (and optionally one noise) per task.
struct HyperParams {
  std::vector<LatentTheta> thetas{LatentTheta{}};
  std::vector<double> data_mean{0.0};   // gamma_0 per task, unconstrained
  std::vector<double> noise_raw{0.0};   // alpha^2 raw, per task or shared

  double noise_variance(int task = 0) const {
    return softplus(noise_raw[noise_raw.size() == 1 ? 0 : task]);
  }
  const LatentTheta& theta(int unit = 0) const {
    return thetas[thetas.size() == 1 ? 0 : unit];
  }

  /// Default initialization: all raw-constrained values 0 (softplus ~0.693),
  /// noise at 1e-4 inside the smoothed box, data mean at the training target
  /// mean, supplied by the caller.
  static HyperParams defaults(double target_mean, int n_theta = 1,
                              int n_task = 1, bool per_task_noise = true);

  /// Flat raw-parameter vector in a fixed order (theta blocks, data means,
  /// noise terms); the optimizer and serialization both use it.
  Vector pack() const;
  void unpack(const Vector& raw);

  /// Flat key-value form for checkpoints; round-trips exactly.
  std::map<std::string, double> to_kv() const;
  static HyperParams from_kv(const std::map<std::string, double>& kv);
};

/// mu(w; theta) = mean_offset - w^2 / (2 width^2); even, maximal at 0.
double latent_mean(double omega, const LatentTheta& theta);
Vector latent_mean(const Vector& omegas, const LatentTheta& theta);

/// Matern-3/2 covariance with outputscale and diagonal jitter:
/// s * (1 + sqrt(3) r / l) exp(-sqrt(3) r / l) + jitter * [r == 0].
double latent_cov(double omega, double omega2, const LatentTheta& theta);

/// Gram of latent_cov over the grid frequencies.
Matrix latent_gram(const FrequencyGrid& grid, const LatentTheta& theta);

/// Multivariate normal log density of a full latent sample under the grid
/// prior (mean latent_mean, covariance latent_gram).
double latent_log_prior(const LatentSample& g, const FrequencyGrid& grid,
                        const LatentTheta& theta);

/// log p(phi): smoothed box on the noise terms (data alpha^2 and latent
/// jitter) over (1e-8, 1e-3), N(0, 100) on the constant means, LogNormal(0,1)
/// on the transformed width/lengthscale/outputscale. Normalized where the
/// density has a closed form; the box term is left unnormalized.
double hyper_log_prior(const HyperParams& hp);

/// log of the smoothed box density exp(-d(x,B)^2 / sqrt(2 sigma^2)) for
/// B = (lo, hi); zero inside the box.
double smoothed_box_log(double x, double lo, double hi, double sigma);

}  // namespace fkl
