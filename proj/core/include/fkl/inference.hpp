#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fkl/gp_math.hpp"
#include "fkl/latent_model.hpp"
#include "fkl/rng.hpp"
#include "fkl/spectral.hpp"
#include "fkl/types.hpp"

namespace fkl {

/// Log likelihood of a mean-removed latent residual.
using LogLikFn = std::function<double(const Vector&)>;

struct EssStepResult {
  Vector state;
  double log_lik = 0.0;      // likelihood at the accepted state
  int likelihood_evals = 0;  // proposals tried this transition
  double move_distance = 0.0;
};

/// One exact elliptical-slice-sampling transition for a zero-mean Gaussian
/// prior with the given Cholesky factor. Always terminates with an accepted
/// state; a bracket narrower than 1e-12 radians means the likelihood is
/// returning NaN or -inf and raises NonTerminating. Pass current_log_lik to
/// avoid re-evaluating the likelihood at the current state.
EssStepResult ess_step(const Vector& current, const CholeskyFactor& prior_chol,
                       const LogLikFn& log_lik, Rng& rng,
                       std::optional<double> current_log_lik = std::nullopt);

/// AMSGRAD optimizer state. v_hat is entrywise nondecreasing across steps.
struct OptState {
  Vector m;
  Vector v;
  Vector v_hat;
  long step_count = 0;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptState init(Eigen::Index size, double learning_rate = 0.01);
};

/// In-place AMSGRAD update:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
///   v_hat <- max(v_hat, v);  params <- params - lr m / (sqrt(v_hat) + eps).
void amsgrad_step(Vector& params, const Vector& grads, OptState& state);

using LossFn = std::function<double(const Vector&)>;

/// Central finite differences with per-coordinate step
/// h_i = 1e-4 * max(1, |raw_i|), probing coordinates in index order.
/// Throws NonFiniteGradient if any probe is non-finite.
Vector fd_gradient(const Vector& raw, const LossFn& loss);

/// Negative joint log density of (phi, g, y):
///   -(log p(phi) + log p(g | theta) + log p(y | g, gamma)),
/// with the kernel induced from the fixed full sample g_tilde.
double loss_phi(const HyperParams& hp, const LatentSample& g_tilde,
                const FrequencyGrid& grid, const Vector& x, const Vector& y);

/// Product-kernel variant: one latent sample per input dimension, one data
/// likelihood under the product of the per-dimension kernels. Shared mode
/// scores every dimension against the single theta block; separate mode
/// pairs dimension d with theta block d.
double loss_phi_multi_input(const HyperParams& hp,
                            const std::vector<LatentSample>& g_dims,
                            const std::vector<FrequencyGrid>& grids,
                            const Matrix& X, const Vector& y);

/// Multi-task variant: one latent sample per task on a shared grid, one data
/// likelihood per task with its own constant mean (and noise, when per-task).
double loss_phi_multi_task(const HyperParams& hp,
                           const std::vector<LatentSample>& g_tasks,
                           const FrequencyGrid& grid,
                           const std::vector<Vector>& xs,
                           const std::vector<Vector>& ys);

/// Gram of the product kernel over rows of X: elementwise product of the
/// per-dimension stationary Grams.
Matrix product_gram(const std::vector<SpectralKernel>& kernels, const Matrix& X,
                    const Matrix& X2);

}  // namespace fkl
