#pragma once

// Test-only oracles, independent of the library's computation paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fkl/rng.hpp"
#include "fkl/types.hpp"

namespace testutil {

// Dense multivariate normal log density via LU inverse and determinant;
// deliberately avoids the library's Cholesky route.
inline double dense_mvn_log_density(const fkl::Vector& x,
                                    const fkl::Vector& mean,
                                    const fkl::Matrix& cov) {
  const Eigen::Index n = x.size();
  Eigen::FullPivLU<fkl::Matrix> lu(cov);
  const fkl::Vector r = x - mean;
  const double quad = r.dot(lu.solve(r));
  const double log_det = std::log(std::abs(lu.determinant()));
  return -0.5 * quad - 0.5 * log_det -
         0.5 * double(n) * std::log(2.0 * 3.141592653589793);
}

// Standard error of the mean of a correlated chain by batch means.
inline double batch_means_se(const std::vector<double>& chain,
                             int n_batches = 50) {
  const int n = static_cast<int>(chain.size());
  const int batch = n / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (int i = b * batch; i < (b + 1) * batch; ++i) acc += chain[i];
    means.push_back(acc / batch);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= n_batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (n_batches - 1);
  return std::sqrt(var / n_batches);
}

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // series for P(a,x), return 1 - P
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-14) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for Q(a,x)
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double chi_squared_p(double stat, int df) {
  return gamma_q(0.5 * df, 0.5 * stat);
}

// Chi-squared goodness-of-fit p-value of samples against N(mu, sigma^2)
// using equiprobable bins.
inline double normal_chi_squared_p(const std::vector<double>& samples,
                                   double mu, double sigma, int bins = 10) {
  std::vector<int> counts(bins, 0);
  for (double s : samples) {
    const double u = 0.5 * std::erfc(-(s - mu) / (sigma * std::sqrt(2.0)));
    int b = static_cast<int>(u * bins);
    b = std::clamp(b, 0, bins - 1);
    ++counts[b];
  }
  const double expected = double(samples.size()) / bins;
  double stat = 0.0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  return chi_squared_p(stat, bins - 1);
}

// Asymptotic two-sample Kolmogorov-Smirnov p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Exact Matern-3/2 sample path on a regular grid via the state-space
// (twice-integrated OU) representation; O(n), suitable for very fine grids.
inline fkl::Vector matern32_path(int n, double dx, double lengthscale,
                                 double sigma, std::uint64_t seed) {
  const double lam = std::sqrt(3.0) / lengthscale;
  const double s2 = sigma * sigma;
  // stationary covariance of (f, f')
  const double p11 = s2, p22 = s2 * lam * lam;

  const double e = std::exp(-lam * dx);
  const double f11 = e * (1.0 + lam * dx), f12 = e * dx;
  const double f21 = -e * lam * lam * dx, f22 = e * (1.0 - lam * dx);

  // Q = P - F P F^T for diagonal P
  const double q11 = p11 - (f11 * f11 * p11 + f12 * f12 * p22);
  const double q12 = -(f11 * f21 * p11 + f12 * f22 * p22);
  const double q22 = p22 - (f21 * f21 * p11 + f22 * f22 * p22);
  const double l11 = std::sqrt(std::max(q11, 0.0));
  const double l21 = l11 > 0.0 ? q12 / l11 : 0.0;
  const double l22 = std::sqrt(std::max(q22 - l21 * l21, 0.0));

  fkl::Rng rng(seed);
  double f = std::sqrt(p11) * rng.normal();
  double fd = std::sqrt(p22) * rng.normal();
  fkl::Vector path(n);
  path[0] = f;
  for (int i = 1; i < n; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double nf = f11 * f + f12 * fd + l11 * z1;
    const double nfd = f21 * f + f22 * fd + l21 * z1 + l22 * z2;
    f = nf;
    fd = nfd;
    path[i] = f;
  }
  return path;
}

// Reference trapezoid quadrature of cos(2 pi tau w) * density(w) over a
// uniform grid given by explicit samples; independent of the library path.
inline double reference_trapezoid(const fkl::Vector& omegas,
                                  const fkl::Vector& density, double tau) {
  const Eigen::Index n = omegas.size();
  const double dw = omegas[1] - omegas[0];
  double acc = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double a =
        std::cos(2.0 * 3.141592653589793 * tau * omegas[i - 1]) * density[i - 1];
    const double b =
        std::cos(2.0 * 3.141592653589793 * tau * omegas[i]) * density[i];
    acc += 0.5 * dw * (a + b);
  }
  return acc;
}

// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testutil
