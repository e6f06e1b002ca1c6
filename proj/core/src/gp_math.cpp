#include "fkl/gp_math.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "fkl/errors.hpp"

namespace fkl {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Vector CholeskyFactor::solve(const Vector& b) const {
  Vector v = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(v);
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
  Matrix v = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(v);
}

double CholeskyFactor::log_det() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

Matrix gram(const StationaryKernel& kernel, const Vector& x, const Vector& x2) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = x2.size();
  Matrix k(n, m);
  const bool same = (&x == &x2) || (n == m && x == x2);
  if (same) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = kernel(std::abs(x[i] - x2[j]));
        k(i, j) = v;
        k(j, i) = v;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        k(i, j) = kernel(std::abs(x[i] - x2[j]));
  }
  return k;
}

CholeskyFactor chol_stable(const Matrix& K) {
  const double diag_mean = K.diagonal().mean();
  const double ladder[] = {0.0, 1e-8, 1e-6, 1e-4};
  for (double level : ladder) {
    const double jitter = level * diag_mean;
    Matrix shifted = K;
    if (jitter != 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      return CholeskyFactor{Matrix(llt.matrixL()), jitter};
    }
  }
  throw NotPositiveDefinite("Cholesky failed after jitter escalation (n=" +
                            std::to_string(K.rows()) + ")");
}

double log_marginal(const Vector& y, const Vector& mean, const Matrix& K,
                    double noise_var) {
  Matrix A = K;
  if (noise_var != 0.0) A.diagonal().array() += noise_var;
  const CholeskyFactor chol = chol_stable(A);
  const Vector r = y - mean;
  const Vector alpha = chol.solve(r);
  const double n = static_cast<double>(y.size());
  return -0.5 * r.dot(alpha) - 0.5 * chol.log_det() - 0.5 * n * kLog2Pi;
}

double log_marginal(const Vector& y, double mean_const, const Matrix& K,
                    double noise_var) {
  return log_marginal(y, Vector::Constant(y.size(), mean_const), K, noise_var);
}

GaussianPosterior posterior_from_grams(const Matrix& Kxx, const Matrix& Ksx,
                                       const Matrix& Kss, const Vector& y,
                                       double mean_const, double noise_var) {
  Matrix A = Kxx;
  if (noise_var != 0.0) A.diagonal().array() += noise_var;
  const CholeskyFactor chol = chol_stable(A);

  GaussianPosterior post;
  const Vector r = y.array() - mean_const;
  post.mean = Ksx * chol.solve(r);
  post.mean.array() += mean_const;

  Matrix cov = Kss - Ksx * chol.solve(Matrix(Ksx.transpose()));
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) < 0.0) {
      cov(i, i) = 0.0;
      ++post.clamped_negative_variances;
    }
  }
  post.covariance = std::move(cov);
  return post;
}

GaussianPosterior posterior(const Vector& train_x, const Vector& y,
                            const Vector& test_x,
                            const StationaryKernel& kernel, double mean_const,
                            double noise_var) {
  if (train_x.size() == 0) throw DegenerateInputs("posterior: empty training set");
  const Matrix Kxx = gram(kernel, train_x, train_x);
  const Matrix Ksx = gram(kernel, test_x, train_x);
  const Matrix Kss = gram(kernel, test_x, test_x);
  return posterior_from_grams(Kxx, Ksx, Kss, y, mean_const, noise_var);
}

}  // namespace fkl
