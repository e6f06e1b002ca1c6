#include "fkl/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "fkl/errors.hpp"
#include "fkl/gp_math.hpp"

namespace fkl {

namespace {

void validate_task(const TaskData& task) {
  if (task.inputs.rows() != task.targets.size())
    throw DegenerateInputs("input/target row counts disagree");
  if (task.inputs.rows() < 2)
    throw DegenerateInputs("need at least 2 training points");
  if (!task.inputs.allFinite() || !task.targets.allFinite())
    throw DegenerateInputs("training data contains non-finite entries");
}

double column_range(const Matrix& inputs, Eigen::Index d) {
  return inputs.col(d).maxCoeff() - inputs.col(d).minCoeff();
}

// The alternating-sampler engine shared by all fit modes. A "unit" is one
// latent realization: an input dimension for product-kernel fits, a task
// for multi-task fits.
class Engine {
 public:
  Engine(std::vector<TaskData> tasks, const TrainConfig& cfg, FitMode mode)
      : mode_(mode), cfg_(cfg), tasks_(std::move(tasks)) {
    for (const TaskData& t : tasks_) validate_task(t);
    multi_task_ = (mode == FitMode::multi_task);

    if (multi_task_) {
      n_units_ = static_cast<int>(tasks_.size());
      double tau_max = 0.0;
      for (const TaskData& t : tasks_) {
        if (t.inputs.cols() != 1)
          throw DegenerateInputs("multi-task fits require 1-d inputs");
        tau_max = std::max(tau_max, column_range(t.inputs, 0));
      }
      if (!(tau_max > 0.0))
        throw DegenerateInputs("all training inputs identical across tasks");
      grids_.push_back(build_grid(tau_max, cfg.grid_size, cfg.freq_scale));
    } else {
      const Matrix& x = tasks_[0].inputs;
      if (mode == FitMode::single && x.cols() != 1)
        throw DegenerateInputs("single mode requires 1-d inputs");
      n_units_ = static_cast<int>(x.cols());
      double max_range = 0.0;
      for (Eigen::Index d = 0; d < x.cols(); ++d)
        max_range = std::max(max_range, column_range(x, d));
      if (!(max_range > 0.0))
        throw DegenerateInputs("all training inputs identical");
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        // constant columns borrow the widest range so the grid stays valid
        const double r = column_range(x, d);
        grids_.push_back(build_grid(r > 0.0 ? r : max_range, cfg.grid_size,
                                    cfg.freq_scale));
      }
    }

    const bool separate = (mode == FitMode::multi_input_separate);
    if (cfg.initial_hp) {
      hp_ = *cfg.initial_hp;
    } else {
      double mean0 = tasks_[0].targets.mean();
      hp_ = HyperParams::defaults(mean0, separate ? n_units_ : 1,
                                  multi_task_ ? n_units_ : 1,
                                  cfg.per_task_noise);
      if (multi_task_)
        for (int t = 0; t < n_units_; ++t)
          hp_.data_mean[t] = tasks_[t].targets.mean();
    }

    tau_index_.reserve(n_units_);
    tables_.reserve(n_units_);
    for (int k = 0; k < n_units_; ++k) {
      const Vector x = unit_inputs(k);
      tau_index_.push_back(build_tau_index(x, x));
      tables_.emplace_back(tau_index_[k].unique_taus, grid_for_unit(k));
    }

    residual_.resize(n_units_);
    mu_.resize(n_units_);
    for (int k = 0; k < n_units_; ++k) {
      mu_[k] = latent_mean(grid_for_unit(k).omegas, hp_.theta(k));
      if (cfg.initial_latents)
        residual_[k] = (*cfg.initial_latents)[k] - mu_[k];
      else
        residual_[k] = -mu_[k];  // g = 0: constant unit spectral density
    }

    for (int k = 0; k < n_units_; ++k) rngs_.push_back(Rng(cfg.seed).stream(k));
  }

  FittedModel run() {
    Vector raw = hp_.pack();
    OptState opt = OptState::init(raw.size(), cfg_.learning_rate);

    freeze_samples();
    diag_.initial_loss = frozen_loss(hp_);

    for (int round = 0; round < cfg_.rounds; ++round) {
      freeze_samples();
      for (int i = 0; i < cfg_.n_optim; ++i) {
        const Vector grad = fd_gradient(raw, [&](const Vector& probe) {
          HyperParams hp = hp_;
          hp.unpack(probe);
          return frozen_loss(hp);
        });
        amsgrad_step(raw, grad, opt);
        hp_.unpack(raw);
        diag_.loss_trace.push_back(frozen_loss(hp_));
        ++diag_.optimizer_steps;
      }
      rebase_residuals();
      for (int k = 0; k < n_units_; ++k) {
        const CholeskyFactor prior = prior_chol(k);
        run_block(k, prior, cfg_.n_ess, &diag_.ess_transitions_per_unit, false);
      }
    }

    // posterior kernel draws at the final hyperparameters
    std::vector<std::vector<LatentSample>> samples(n_units_);
    std::vector<CholeskyFactor> priors;
    priors.reserve(n_units_);
    for (int k = 0; k < n_units_; ++k) priors.push_back(prior_chol(k));
    for (int j = 0; j < cfg_.j_samples; ++j) {
      for (int k = 0; k < n_units_; ++k)
        run_block(k, priors[k], cfg_.thin, &diag_.posterior_draw_transitions,
                  k == 0 && j == 0);
      for (int k = 0; k < n_units_; ++k)
        samples[k].push_back(mu_[k] + residual_[k]);
    }

    freeze_samples();
    diag_.final_loss = frozen_loss(hp_);
    if (move_count_ > 0) diag_.mean_ess_move_distance = move_sum_ / move_count_;

    FittedModel model;
    model.mode = mode_;
    model.config = cfg_;
    model.hp = hp_;
    model.grids = grids_;
    model.latent_samples = std::move(samples);
    model.data = tasks_;
    model.diagnostics = diag_;
    return model;
  }

 private:
  Vector unit_inputs(int k) const {
    return multi_task_ ? Vector(tasks_[k].inputs.col(0))
                       : Vector(tasks_[0].inputs.col(k));
  }

  const FrequencyGrid& grid_for_unit(int k) const {
    return grids_[grids_.size() == 1 ? 0 : k];
  }

  Vector density_of(int k) const {
    return kernel_from_latent(mu_[k] + residual_[k], grid_for_unit(k)).density;
  }

  Matrix gram_of(int k, const Vector& density) const {
    return tau_index_[k].assemble(tables_[k].kernel_values(density));
  }

  CholeskyFactor prior_chol(int k) const {
    return chol_stable(latent_gram(grid_for_unit(k), hp_.theta(k)));
  }

  // Snapshot the full samples g = mu + r; the optimizer holds them fixed, so
  // the data Grams they induce are precomputed here.
  void freeze_samples() {
    frozen_.resize(n_units_);
    frozen_gram_.resize(n_units_);
    for (int k = 0; k < n_units_; ++k) {
      frozen_[k] = mu_[k] + residual_[k];
      frozen_gram_[k] = gram_of(k, density_of(k));
    }
  }

  // Loss of Eq. 7/8 at candidate hyperparameters with the frozen samples.
  double frozen_loss(const HyperParams& hp) const {
    double lp = hyper_log_prior(hp);
    for (int k = 0; k < n_units_; ++k)
      lp += latent_log_prior(frozen_[k], grid_for_unit(k), hp.theta(k));
    if (multi_task_) {
      for (int t = 0; t < n_units_; ++t)
        lp += log_marginal(tasks_[t].targets, hp.data_mean[t], frozen_gram_[t],
                           hp.noise_variance(t));
    } else {
      Matrix K = frozen_gram_[0];
      for (int d = 1; d < n_units_; ++d) K.array() *= frozen_gram_[d].array();
      lp += log_marginal(tasks_[0].targets, hp.data_mean[0], K,
                         hp.noise_variance(0));
    }
    return -lp;
  }

  // Re-express the state about the latent mean of the (possibly updated)
  // hyperparameters: the full samples are preserved, the residuals shift.
  void rebase_residuals() {
    for (int k = 0; k < n_units_; ++k) {
      const Vector full = mu_[k] + residual_[k];
      mu_[k] = latent_mean(grid_for_unit(k).omegas, hp_.theta(k));
      residual_[k] = full - mu_[k];
    }
    refresh_grams();
  }

  void refresh_grams() {
    unit_gram_.resize(n_units_);
    for (int k = 0; k < n_units_; ++k) unit_gram_[k] = gram_of(k, density_of(k));
  }

  // `count` ESS transitions for unit k against its data likelihood, with the
  // other units' Gram factors held fixed.
  void run_block(int k, const CholeskyFactor& prior, int count, long* counter,
                 bool refresh) {
    if (refresh) refresh_grams();

    Matrix fixed;
    if (!multi_task_ && n_units_ > 1) {
      fixed = Matrix::Ones(unit_gram_[0].rows(), unit_gram_[0].cols());
      for (int d = 0; d < n_units_; ++d)
        if (d != k) fixed.array() *= unit_gram_[d].array();
    }

    const TaskData& task = multi_task_ ? tasks_[k] : tasks_[0];
    const double gamma0 = hp_.data_mean[multi_task_ ? k : 0];
    const double noise = hp_.noise_variance(multi_task_ ? k : 0);

    const auto log_lik = [&](const Vector& r) -> double {
      const Vector g = mu_[k] + r;
      if (!g.allFinite()) return -std::numeric_limits<double>::infinity();
      Matrix K = gram_of(k, kernel_from_latent(g, grid_for_unit(k)).density);
      if (fixed.size() > 0) K.array() *= fixed.array();
      try {
        return log_marginal(task.targets, gamma0, K, noise);
      } catch (const NotPositiveDefinite&) {
        return -std::numeric_limits<double>::infinity();
      }
    };

    std::optional<double> current_ll;
    for (int i = 0; i < count; ++i) {
      EssStepResult step = ess_step(residual_[k], prior, log_lik, rngs_[k],
                                    current_ll);
      residual_[k] = std::move(step.state);
      current_ll = step.log_lik;
      diag_.likelihood_evals += step.likelihood_evals;
      move_sum_ += step.move_distance;
      ++move_count_;
      ++(*counter);
    }
    unit_gram_[k] = gram_of(k, density_of(k));
  }

  FitMode mode_;
  TrainConfig cfg_;
  std::vector<TaskData> tasks_;
  std::vector<FrequencyGrid> grids_;
  int n_units_ = 0;
  bool multi_task_ = false;

  HyperParams hp_;
  std::vector<Vector> residual_;
  std::vector<Vector> mu_;
  std::vector<TauIndex> tau_index_;
  std::vector<TrapezoidTable> tables_;
  std::vector<Rng> rngs_;

  std::vector<LatentSample> frozen_;
  std::vector<Matrix> frozen_gram_;
  std::vector<Matrix> unit_gram_;

  FitDiagnostics diag_;
  double move_sum_ = 0.0;
  long move_count_ = 0;
};

}  // namespace

FittedModel fit(const TaskData& data, const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.mode = FitMode::single;
  Engine engine({data}, cfg, FitMode::single);
  return engine.run();
}

FittedModel fit_multi_input(const TaskData& data, const TrainConfig& config) {
  TrainConfig cfg = config;
  if (cfg.mode != FitMode::multi_input_separate)
    cfg.mode = FitMode::multi_input_shared;
  Engine engine({data}, cfg, cfg.mode);
  return engine.run();
}

FittedModel fit_multi_task(const std::vector<TaskData>& tasks,
                           const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.mode = FitMode::multi_task;
  Engine engine(tasks, cfg, FitMode::multi_task);
  return engine.run();
}

std::vector<std::vector<SpectralKernel>> posterior_kernels(
    const FittedModel& model) {
  std::vector<std::vector<SpectralKernel>> kernels(model.units());
  for (int k = 0; k < model.units(); ++k) {
    kernels[k].reserve(model.latent_samples[k].size());
    for (const LatentSample& g : model.latent_samples[k])
      kernels[k].push_back(kernel_from_latent(g, model.grid_for_unit(k)));
  }
  return kernels;
}

}  // namespace fkl
