#include "fkl/inference.hpp"

#include <cmath>

#include "fkl/errors.hpp"

namespace fkl {

namespace {
constexpr double kTwoPi = 6.283185307179586;
constexpr double kBracketFloor = 1e-12;
}

EssStepResult ess_step(const Vector& current, const CholeskyFactor& prior_chol,
                       const LogLikFn& log_lik, Rng& rng,
                       std::optional<double> current_log_lik) {
  Vector z(current.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Vector nu = prior_chol.lower * z;

  const double ll0 = current_log_lik ? *current_log_lik : log_lik(current);
  const double log_threshold = ll0 + std::log(rng.uniform_pos());

  double angle = rng.uniform(0.0, kTwoPi);
  double angle_min = angle - kTwoPi;
  double angle_max = angle;

  EssStepResult result;
  for (;;) {
    Vector proposal = current * std::cos(angle) + nu * std::sin(angle);
    const double ll = log_lik(proposal);
    ++result.likelihood_evals;
    if (ll > log_threshold) {
      result.move_distance = (proposal - current).norm();
      result.state = std::move(proposal);
      result.log_lik = ll;
      return result;
    }
    if (angle < 0.0) angle_min = angle;
    else angle_max = angle;
    if (angle_max - angle_min < kBracketFloor)
      throw NonTerminating(
          "slice bracket collapsed; likelihood is NaN or -inf at the current state");
    angle = rng.uniform(angle_min, angle_max);
  }
}

OptState OptState::init(Eigen::Index size, double learning_rate) {
  OptState state;
  state.m = Vector::Zero(size);
  state.v = Vector::Zero(size);
  state.v_hat = Vector::Zero(size);
  state.learning_rate = learning_rate;
  return state;
}

void amsgrad_step(Vector& params, const Vector& grads, OptState& state) {
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v +
            (1.0 - state.beta2) * grads.cwiseProduct(grads);
  state.v_hat = state.v_hat.cwiseMax(state.v);
  params -= state.learning_rate *
            (state.m.array() / (state.v_hat.array().sqrt() + state.epsilon))
                .matrix();
  ++state.step_count;
}

Vector fd_gradient(const Vector& raw, const LossFn& loss) {
  Vector grad(raw.size());
  Vector probe = raw;
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(raw[i]));
    probe[i] = raw[i] + h;
    const double up = loss(probe);
    probe[i] = raw[i] - h;
    const double down = loss(probe);
    probe[i] = raw[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NonFiniteGradient("non-finite loss at probe of coordinate " +
                              std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double loss_phi(const HyperParams& hp, const LatentSample& g_tilde,
                const FrequencyGrid& grid, const Vector& x, const Vector& y) {
  const SpectralKernel kernel = kernel_from_latent(g_tilde, grid);
  const Matrix K = gram([&](double tau) { return kernel(tau); }, x, x);
  double lp = hyper_log_prior(hp);
  lp += latent_log_prior(g_tilde, grid, hp.theta(0));
  lp += log_marginal(y, hp.data_mean[0], K, hp.noise_variance(0));
  return -lp;
}

Matrix product_gram(const std::vector<SpectralKernel>& kernels, const Matrix& X,
                    const Matrix& X2) {
  Matrix K = Matrix::Ones(X.rows(), X2.rows());
  for (std::size_t d = 0; d < kernels.size(); ++d) {
    const Vector xd = X.col(d);
    const Vector xd2 = X2.col(d);
    K.array() *=
        gram([&](double tau) { return kernels[d](tau); }, xd, xd2).array();
  }
  return K;
}

double loss_phi_multi_input(const HyperParams& hp,
                            const std::vector<LatentSample>& g_dims,
                            const std::vector<FrequencyGrid>& grids,
                            const Matrix& X, const Vector& y) {
  double lp = hyper_log_prior(hp);
  std::vector<SpectralKernel> kernels;
  kernels.reserve(g_dims.size());
  for (std::size_t d = 0; d < g_dims.size(); ++d) {
    lp += latent_log_prior(g_dims[d], grids[d], hp.theta(static_cast<int>(d)));
    kernels.push_back(kernel_from_latent(g_dims[d], grids[d]));
  }
  const Matrix K = product_gram(kernels, X, X);
  lp += log_marginal(y, hp.data_mean[0], K, hp.noise_variance(0));
  return -lp;
}

double loss_phi_multi_task(const HyperParams& hp,
                           const std::vector<LatentSample>& g_tasks,
                           const FrequencyGrid& grid,
                           const std::vector<Vector>& xs,
                           const std::vector<Vector>& ys) {
  double lp = hyper_log_prior(hp);
  for (std::size_t t = 0; t < g_tasks.size(); ++t) {
    lp += latent_log_prior(g_tasks[t], grid, hp.theta(0));
    const SpectralKernel kernel = kernel_from_latent(g_tasks[t], grid);
    const Matrix K = gram([&](double tau) { return kernel(tau); }, xs[t], xs[t]);
    lp += log_marginal(ys[t], hp.data_mean[t], K,
                       hp.noise_variance(static_cast<int>(t)));
  }
  return -lp;
}

}  // namespace fkl
