#pragma once

#include <cstdint>
#include <string>

#include "fkl/predict.hpp"
#include "fkl/types.hpp"

namespace fkl {

/// Parametric comparison models: RBF and Matern-5/2 with a scalar
/// lengthscale, their ARD variants, and the spectral mixture kernel (1-d).
enum class BaselineKind { rbf, matern, ard, ard_matern, sm };

BaselineKind baseline_from_name(const std::string& name);
std::string baseline_name(BaselineKind kind);

struct BaselineConfig {
  int steps = 50;  // matches the FKL budget of rounds * n_optim by default
  double learning_rate = 0.1;
  int sm_components = 4;
  bool sm_data_init = true;  // statistics-based random init vs softplus(0)
  std::uint64_t seed = 0;
};

/// A fitted parametric GP: constant mean, softplus-constrained noise and
/// kernel parameters, trained by AMSGRAD on the exact log marginal
/// likelihood with finite-difference gradients.
struct BaselineModel {
  BaselineKind kind = BaselineKind::rbf;
  int dims = 1;
  int sm_components = 0;
  Vector raw;
  Matrix train_x;
  Vector train_y;

  double kernel(const Vector& a, const Vector& b) const;
  double mean_const() const { return raw[0]; }
  double noise_variance() const;
  double log_marginal_likelihood() const;

  /// Single-component predictive mixture, so baseline and FKL predictions
  /// flow through the same metric machinery.
  PredictiveMixture predictive(const Matrix& test_x,
                               bool observation_noise = true) const;
};

BaselineModel fit_baseline(BaselineKind kind, const Matrix& X, const Vector& y,
                           const BaselineConfig& config);

}  // namespace fkl
