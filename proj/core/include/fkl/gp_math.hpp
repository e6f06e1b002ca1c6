#pragma once

#include <functional>

#include "fkl/types.hpp"

namespace fkl {

/// Stationary kernel as a function of the input distance tau = |x - x'|.
using StationaryKernel = std::function<double(double)>;

/// Lower-triangular Cholesky factor of a (possibly jittered) Gram matrix.
/// lower * lower^T reproduces K + jitter_used * I.
struct CholeskyFactor {
  Matrix lower;
  double jitter_used = 0.0;

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  /// log |K + jitter_used * I| = 2 * sum(log diag(L)).
  double log_det() const;
};

/// Posterior mean and covariance of the noise-free latent function at a set
/// of test inputs. Negative diagonal entries produced by quadrature error
/// are clamped to zero; the count is recorded.
struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
  int clamped_negative_variances = 0;

  Vector variance() const { return covariance.diagonal(); }
};

/// Dense Gram matrix K(i,j) = kernel(|x[i] - x2[j]|). When x and x2 are the
/// same vector the result is exactly symmetric (lower triangle mirrored).
Matrix gram(const StationaryKernel& kernel, const Vector& x, const Vector& x2);

/// Cholesky factorization with jitter escalation. Tries jitter levels
/// {0, 1e-8, 1e-6, 1e-4} * mean(diag(K)) and records the first that
/// succeeds. Throws NotPositiveDefinite if all fail.
CholeskyFactor chol_stable(const Matrix& K);

/// Gaussian log marginal likelihood
///   -1/2 r^T (K + s2 I)^-1 r - 1/2 log|K + s2 I| - n/2 log(2 pi),
/// r = y - mean, factorized via chol_stable.
double log_marginal(const Vector& y, const Vector& mean, const Matrix& K,
                    double noise_var);

/// Same with a constant mean.
double log_marginal(const Vector& y, double mean_const, const Matrix& K,
                    double noise_var);

/// Posterior from precomputed Gram blocks:
///   mean = mean_const + Ksx (Kxx + s2 I)^-1 (y - mean_const)
///   cov  = Kss - Ksx (Kxx + s2 I)^-1 Kxs
GaussianPosterior posterior_from_grams(const Matrix& Kxx, const Matrix& Ksx,
                                       const Matrix& Kss, const Vector& y,
                                       double mean_const, double noise_var);

/// Exact GP posterior for 1-d inputs under a stationary kernel.
GaussianPosterior posterior(const Vector& train_x, const Vector& y,
                            const Vector& test_x,
                            const StationaryKernel& kernel, double mean_const,
                            double noise_var);

}  // namespace fkl
