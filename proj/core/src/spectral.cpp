#include "fkl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fkl/errors.hpp"

namespace fkl {

namespace {
constexpr double kTwoPi = 6.283185307179586;
constexpr double kLatentClamp = 30.0;
}

FrequencyGrid make_grid(double delta_omega, int count) {
  if (count < 2) throw DegenerateInputs("grid needs at least 2 frequencies");
  if (!(delta_omega > 0.0)) throw DegenerateInputs("grid spacing must be positive");
  FrequencyGrid grid;
  grid.delta_omega = delta_omega;
  grid.omegas = delta_omega * Vector::LinSpaced(count, 0.0, double(count - 1));
  return grid;
}

FrequencyGrid build_grid(double tau_max, int count, double freq_scale) {
  if (!(tau_max > 0.0))
    throw DegenerateInputs("build_grid: tau_max must be positive (got " +
                           std::to_string(tau_max) + ")");
  if (!(freq_scale > 0.0))
    throw DegenerateInputs("build_grid: freq_scale must be positive");
  const double period = 8.0 * tau_max;
  FrequencyGrid grid = make_grid(freq_scale / period, count);
  grid.period = period;
  return grid;
}

Vector trapezoid_weights(const FrequencyGrid& grid) {
  Vector w = Vector::Constant(grid.count(), grid.delta_omega);
  w[0] *= 0.5;
  w[grid.count() - 1] *= 0.5;
  return w;
}

double kernel_value(const SpectralKernel& kernel, double tau) {
  const Vector& omegas = kernel.grid.omegas;
  const int n = kernel.grid.count();
  const double dw = kernel.grid.delta_omega;
  double sum = 0.5 * (kernel.density[0] +
                      std::cos(kTwoPi * tau * omegas[n - 1]) * kernel.density[n - 1]);
  for (int i = 1; i < n - 1; ++i)
    sum += std::cos(kTwoPi * tau * omegas[i]) * kernel.density[i];
  return dw * sum;
}

double SpectralKernel::operator()(double tau) const {
  return kernel_value(*this, tau);
}

SpectralKernel kernel_from_latent(const LatentSample& g,
                                  const FrequencyGrid& grid, int* clamped) {
  if (g.size() != grid.count())
    throw NonFiniteLatent("latent sample length " + std::to_string(g.size()) +
                          " does not match grid size " +
                          std::to_string(grid.count()));
  if (!g.allFinite())
    throw NonFiniteLatent("latent sample contains non-finite entries");

  SpectralKernel kernel;
  kernel.grid = grid;
  kernel.density.resize(g.size());
  int n_clamped = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double v = g[i];
    if (v > kLatentClamp || v < -kLatentClamp) {
      v = std::clamp(v, -kLatentClamp, kLatentClamp);
      ++n_clamped;
    }
    kernel.density[i] = std::exp(v);
  }
  if (clamped) *clamped = n_clamped;
  return kernel;
}

TrapezoidTable::TrapezoidTable(const Vector& taus, const FrequencyGrid& grid) {
  const Vector w = trapezoid_weights(grid);
  table_.resize(taus.size(), grid.count());
  for (Eigen::Index t = 0; t < taus.size(); ++t)
    for (int i = 0; i < grid.count(); ++i)
      table_(t, i) = std::cos(kTwoPi * taus[t] * grid.omegas[i]) * w[i];
}

Matrix TauIndex::assemble(const Vector& kernel_values) const {
  Matrix out(index.rows(), index.cols());
  for (Eigen::Index i = 0; i < index.rows(); ++i)
    for (Eigen::Index j = 0; j < index.cols(); ++j)
      out(i, j) = kernel_values[index(i, j)];
  return out;
}

TauIndex build_tau_index(const Vector& x, const Vector& x2) {
  TauIndex idx;
  idx.index.resize(x.size(), x2.size());
  std::map<double, int> seen;
  std::vector<double> taus;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = 0; j < x2.size(); ++j) {
      const double tau = std::abs(x[i] - x2[j]);
      auto [it, inserted] = seen.emplace(tau, static_cast<int>(taus.size()));
      if (inserted) taus.push_back(tau);
      idx.index(i, j) = it->second;
    }
  }
  idx.unique_taus = Eigen::Map<const Vector>(taus.data(), taus.size());
  return idx;
}

}  // namespace fkl
