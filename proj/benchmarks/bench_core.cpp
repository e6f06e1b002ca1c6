#include <benchmark/benchmark.h>

#include "fkl/datasets.hpp"
#include "fkl/errors.hpp"
#include "fkl/gp_math.hpp"
#include "fkl/inference.hpp"
#include "fkl/latent_model.hpp"
#include "fkl/rng.hpp"
#include "fkl/spectral.hpp"

using namespace fkl;

namespace {

Vector random_inputs(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(-7.0, 7.0);
  std::sort(x.begin(), x.end());
  return x;
}

Vector random_density(int count, std::uint64_t seed) {
  Rng rng(seed);
  Vector density(count);
  for (int i = 0; i < count; ++i) density[i] = std::exp(0.3 * rng.normal());
  return density;
}

}  // namespace

static void BM_KernelValue(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const FrequencyGrid grid = build_grid(14.0, count, 1.0);
  SpectralKernel kernel{grid, random_density(count, 1)};
  double tau = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel(tau));
    tau += 0.01;
  }
}
BENCHMARK(BM_KernelValue)->Arg(100)->Arg(300);

static void BM_TrapezoidTableApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int count = 300;
  const FrequencyGrid grid = build_grid(14.0, count, 1.0);
  const Vector x = random_inputs(n, 2);
  const TauIndex idx = build_tau_index(x, x);
  const TrapezoidTable table(idx.unique_taus, grid);
  const Vector density = random_density(count, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(idx.assemble(table.kernel_values(density)));
  }
  state.SetItemsProcessed(state.iterations() * idx.unique_taus.size() * count);
}
BENCHMARK(BM_TrapezoidTableApply)->Arg(60)->Arg(150);

static void BM_CholStable(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Vector x = random_inputs(n, 4);
  Matrix K = gram([](double tau) { return std::exp(-0.5 * tau * tau); }, x, x);
  K.diagonal().array() += 1e-4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chol_stable(K));
  }
}
BENCHMARK(BM_CholStable)->Arg(100)->Arg(300);

static void BM_LogMarginal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Vector x = random_inputs(n, 5);
  const Matrix K = gram([](double tau) { return std::exp(-0.5 * tau * tau); }, x, x);
  const Vector y = gp_draw([](double tau) { return std::exp(-0.5 * tau * tau); }, x, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_marginal(y, 0.0, K, 1e-2));
  }
}
BENCHMARK(BM_LogMarginal)->Arg(100)->Arg(300);

static void BM_LatentGram(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const FrequencyGrid grid = build_grid(14.0, count, 1.0);
  const LatentTheta theta;
  for (auto _ : state) {
    benchmark::DoNotOptimize(latent_gram(grid, theta));
  }
}
BENCHMARK(BM_LatentGram)->Arg(100)->Arg(300);

static void BM_EssStep(benchmark::State& state) {
  const int count = 100;
  const int n = 120;
  const FrequencyGrid grid = build_grid(14.0, count, 1.0);
  LatentTheta theta;
  theta.jitter_raw = softplus_inverse(1e-3);
  const CholeskyFactor prior = chol_stable(latent_gram(grid, theta));
  const Vector mu = latent_mean(grid.omegas, theta);

  const Vector x = random_inputs(n, 7);
  const Vector y = gp_draw([](double tau) { return std::exp(-0.5 * tau * tau); }, x, 8);
  const TauIndex idx = build_tau_index(x, x);
  const TrapezoidTable table(idx.unique_taus, grid);

  const LogLikFn log_lik = [&](const Vector& r) {
    const Vector density = (mu + r).array().min(30.0).max(-30.0).exp();
    const Matrix K = idx.assemble(table.kernel_values(density));
    try {
      return log_marginal(y, 0.0, K, 1e-2);
    } catch (const NotPositiveDefinite&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  Rng rng(9);
  Vector current = Vector::Zero(count);
  std::optional<double> ll;
  for (auto _ : state) {
    EssStepResult step = ess_step(current, prior, log_lik, rng, ll);
    current = step.state;
    ll = step.log_lik;
    benchmark::DoNotOptimize(current.sum());
  }
}
BENCHMARK(BM_EssStep);

BENCHMARK_MAIN();
