#pragma once

#include "fkl/types.hpp"

namespace fkl {

/// Evenly spaced frequency discretization starting at zero:
/// omegas[n] = n * delta_omega, n = 0..count-1, in cycles per input unit.
struct FrequencyGrid {
  Vector omegas;
  double delta_omega = 0.0;
  double period = 0.0;  // P = 8 * tau_max when built from data

  int count() const { return static_cast<int>(omegas.size()); }
  double max_omega() const { return omegas[omegas.size() - 1]; }
};

/// Grid from the data heuristic: P = 8 * tau_max, delta_omega =
/// freq_scale / P. freq_scale > 1 widens frequency coverage without
/// changing the point count. Throws DegenerateInputs if tau_max <= 0.
FrequencyGrid build_grid(double tau_max, int count, double freq_scale = 1.0);

/// Grid with explicit spacing; used by quadrature tests and plot output.
FrequencyGrid make_grid(double delta_omega, int count);

/// A stationary kernel defined by a sampled spectral density on a grid,
/// evaluated by the trapezoid rule
///   k(tau) = sum_i w_i cos(2 pi tau omega_i) S(omega_i),
/// with w_0 = w_{I-1} = delta_omega/2 and w_i = delta_omega inside. The
/// kernel is even in tau and exactly periodic with period 1/delta_omega.
struct SpectralKernel {
  FrequencyGrid grid;
  Vector density;  // S(omega_i), strictly positive

  double operator()(double tau) const;
};

/// Trapezoid quadrature weights for a grid (endpoints halved).
Vector trapezoid_weights(const FrequencyGrid& grid);

double kernel_value(const SpectralKernel& kernel, double tau);

/// Density from a latent log-density sample: S = exp(clamp(g, +-30)).
/// Throws NonFiniteLatent on NaN/inf entries. clamped counts entries hit
/// by the overflow guard.
SpectralKernel kernel_from_latent(const LatentSample& g,
                                  const FrequencyGrid& grid,
                                  int* clamped = nullptr);

/// Precomputed weighted-cosine table for a fixed set of distances. One
/// matrix-vector product maps a density to kernel values at every tau, so
/// repeated evaluations during sampling cost O(n_tau * I) flops with no
/// cosine calls.
class TrapezoidTable {
 public:
  TrapezoidTable() = default;
  TrapezoidTable(const Vector& taus, const FrequencyGrid& grid);

  /// kernel values at the table's taus for the given density.
  Vector kernel_values(const Vector& density) const { return table_ * density; }

  Eigen::Index tau_count() const { return table_.rows(); }

 private:
  Matrix table_;  // (n_tau x I), cos(2 pi tau_t omega_i) * w_i
};

/// Unique pairwise distances of (x, x2) with an index map for assembling
/// Gram matrices from per-unique-tau kernel values. For gridded inputs the
/// unique set is tiny; this is the per-fit memoization of kernel values.
struct TauIndex {
  Vector unique_taus;
  Eigen::MatrixXi index;  // (n x m) -> row in unique_taus

  Matrix assemble(const Vector& kernel_values) const;
};

TauIndex build_tau_index(const Vector& x, const Vector& x2);

}  // namespace fkl
