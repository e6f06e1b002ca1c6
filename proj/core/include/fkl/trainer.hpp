#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fkl/inference.hpp"
#include "fkl/latent_model.hpp"
#include "fkl/spectral.hpp"
#include "fkl/types.hpp"

namespace fkl {

enum class FitMode { single, multi_input_shared, multi_input_separate, multi_task };

struct TrainConfig {
  int rounds = 5;
  int n_optim = 10;   // gradient steps per round
  int n_ess = 50;     // ESS transitions per unit per round
  int j_samples = 10; // posterior kernel draws J
  int thin = 5;       // ESS transitions between retained posterior draws
  int grid_size = 100;
  double freq_scale = 1.0;
  double learning_rate = 0.01;
  FitMode mode = FitMode::single;
  bool per_task_noise = true;
  std::uint64_t seed = 0;

  /// Optional overrides; defaults are HyperParams::defaults and g = 0.
  std::optional<HyperParams> initial_hp;
  std::optional<std::vector<LatentSample>> initial_latents;
};

/// One task's training data. inputs is n x D; multi-task fits require D = 1.
struct TaskData {
  Matrix inputs;
  Vector targets;
};

struct FitDiagnostics {
  std::vector<double> loss_trace;  // one entry per optimizer step
  double initial_loss = 0.0;
  double final_loss = 0.0;
  long optimizer_steps = 0;
  long ess_transitions_per_unit = 0;  // alternation phase, per dim/task
  long posterior_draw_transitions = 0;
  long likelihood_evals = 0;
  double mean_ess_move_distance = 0.0;
};

/// Result of the alternating sampler: final hyperparameters plus J retained
/// full latent samples per unit (input dimension or task).
struct FittedModel {
  FitMode mode = FitMode::single;
  TrainConfig config;
  HyperParams hp;
  std::vector<FrequencyGrid> grids;  // per dimension; one entry otherwise
  std::vector<std::vector<LatentSample>> latent_samples;  // [unit][j]
  std::vector<TaskData> data;  // size 1 unless multi-task
  FitDiagnostics diagnostics;

  int units() const { return static_cast<int>(latent_samples.size()); }
  const FrequencyGrid& grid_for_unit(int unit) const {
    return grids[grids.size() == 1 ? 0 : unit];
  }
};

/// Alternating sampler on one task with 1-d inputs: per round, n_optim
/// AMSGRAD steps on the hyperparameter loss with the latent sample held
/// fixed, then n_ess elliptical slice transitions on the latent residual at
/// the new hyperparameters. After the final round draws j_samples posterior
/// latents, thinned every `thin` transitions.
FittedModel fit(const TaskData& data, const TrainConfig& config);

/// Product-kernel fit over D input dimensions. Shared mode keeps one theta
/// block with D independent latent realizations; separate mode learns one
/// theta block per dimension. ESS sweeps dimensions in fixed order.
FittedModel fit_multi_input(const TaskData& data, const TrainConfig& config);

/// Multi-task fit: one shared theta, an independent latent realization and
/// constant mean (and noise, by default) per task, shared frequency grid
/// from the pooled tau range.
FittedModel fit_multi_task(const std::vector<TaskData>& tasks,
                           const TrainConfig& config);

/// The J posterior kernels per unit, exp-transforming the retained samples.
std::vector<std::vector<SpectralKernel>> posterior_kernels(
    const FittedModel& model);

}  // namespace fkl
