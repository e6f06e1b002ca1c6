#include "fkl/latent_model.hpp"

#include <cmath>

#include "fkl/errors.hpp"
#include "fkl/gp_math.hpp"

namespace fkl {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNoiseBoxLo = 1e-8;
constexpr double kNoiseBoxHi = 1e-3;
// absolute smoothing sigma of the box density; values above the box pay a
// quadratic penalty on this scale rather than hitting a hard wall
constexpr double kNoiseBoxSigma = 0.01;

double log_normal_density(double x, double variance) {
  return -0.5 * x * x / variance - 0.5 * std::log(variance) - 0.5 * kLog2Pi;
}

// LogNormal(0, 1) on a positive value.
double log_lognormal_density(double v) {
  const double lv = std::log(v);
  return -0.5 * lv * lv - lv - 0.5 * kLog2Pi;
}
}  // namespace

double softplus(double raw) {
  if (raw > 30.0) return raw + std::log1p(std::exp(-raw));
  return std::log1p(std::exp(raw));
}

double softplus_inverse(double value) {
  if (value > 30.0) return value - std::log1p(-std::exp(-value));
  return std::log(std::expm1(value));
}

HyperParams HyperParams::defaults(double target_mean, int n_theta, int n_task,
                                  bool per_task_noise) {
  HyperParams hp;
  hp.thetas.assign(n_theta, LatentTheta{});
  hp.data_mean.assign(n_task, target_mean);
  hp.noise_raw.assign(per_task_noise ? n_task : 1, softplus_inverse(1e-4));
  return hp;
}

Vector HyperParams::pack() const {
  Vector raw(5 * thetas.size() + data_mean.size() + noise_raw.size());
  Eigen::Index p = 0;
  for (const LatentTheta& t : thetas) {
    raw[p++] = t.mean_offset;
    raw[p++] = t.mean_width_raw;
    raw[p++] = t.lengthscale_raw;
    raw[p++] = t.jitter_raw;
    raw[p++] = t.outputscale_raw;
  }
  for (double g : data_mean) raw[p++] = g;
  for (double s : noise_raw) raw[p++] = s;
  return raw;
}

void HyperParams::unpack(const Vector& raw) {
  Eigen::Index p = 0;
  for (LatentTheta& t : thetas) {
    t.mean_offset = raw[p++];
    t.mean_width_raw = raw[p++];
    t.lengthscale_raw = raw[p++];
    t.jitter_raw = raw[p++];
    t.outputscale_raw = raw[p++];
  }
  for (double& g : data_mean) g = raw[p++];
  for (double& s : noise_raw) s = raw[p++];
}

std::map<std::string, double> HyperParams::to_kv() const {
  std::map<std::string, double> kv;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const std::string p = "theta." + std::to_string(k) + ".";
    kv[p + "mean_offset"] = thetas[k].mean_offset;
    kv[p + "mean_width_raw"] = thetas[k].mean_width_raw;
    kv[p + "lengthscale_raw"] = thetas[k].lengthscale_raw;
    kv[p + "jitter_raw"] = thetas[k].jitter_raw;
    kv[p + "outputscale_raw"] = thetas[k].outputscale_raw;
  }
  for (std::size_t t = 0; t < data_mean.size(); ++t)
    kv["data_mean." + std::to_string(t)] = data_mean[t];
  for (std::size_t t = 0; t < noise_raw.size(); ++t)
    kv["noise_raw." + std::to_string(t)] = noise_raw[t];
  return kv;
}

HyperParams HyperParams::from_kv(const std::map<std::string, double>& kv) {
  HyperParams hp;
  hp.thetas.clear();
  hp.data_mean.clear();
  hp.noise_raw.clear();
  for (std::size_t k = 0;; ++k) {
    const std::string p = "theta." + std::to_string(k) + ".";
    auto it = kv.find(p + "mean_offset");
    if (it == kv.end()) break;
    LatentTheta t;
    t.mean_offset = it->second;
    t.mean_width_raw = kv.at(p + "mean_width_raw");
    t.lengthscale_raw = kv.at(p + "lengthscale_raw");
    t.jitter_raw = kv.at(p + "jitter_raw");
    t.outputscale_raw = kv.at(p + "outputscale_raw");
    hp.thetas.push_back(t);
  }
  for (std::size_t t = 0;; ++t) {
    auto it = kv.find("data_mean." + std::to_string(t));
    if (it == kv.end()) break;
    hp.data_mean.push_back(it->second);
  }
  for (std::size_t t = 0;; ++t) {
    auto it = kv.find("noise_raw." + std::to_string(t));
    if (it == kv.end()) break;
    hp.noise_raw.push_back(it->second);
  }
  if (hp.thetas.empty() || hp.data_mean.empty() || hp.noise_raw.empty())
    throw ParseError("hyperparameter table is missing required blocks");
  return hp;
}

double latent_mean(double omega, const LatentTheta& theta) {
  const double w = theta.mean_width();
  return theta.mean_offset - omega * omega / (2.0 * w * w);
}

Vector latent_mean(const Vector& omegas, const LatentTheta& theta) {
  const double w = theta.mean_width();
  return theta.mean_offset - omegas.array().square() / (2.0 * w * w);
}

double latent_cov(double omega, double omega2, const LatentTheta& theta) {
  const double r = std::abs(omega - omega2);
  const double z = kSqrt3 * r / theta.lengthscale();
  double v = theta.outputscale() * (1.0 + z) * std::exp(-z);
  if (r == 0.0) v += theta.jitter();
  return v;
}

Matrix latent_gram(const FrequencyGrid& grid, const LatentTheta& theta) {
  const int n = grid.count();
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = latent_cov(grid.omegas[i], grid.omegas[j], theta);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double latent_log_prior(const LatentSample& g, const FrequencyGrid& grid,
                        const LatentTheta& theta) {
  if (g.size() != grid.count())
    throw NonFiniteLatent("latent sample / grid size mismatch");
  return log_marginal(g, latent_mean(grid.omegas, theta),
                      latent_gram(grid, theta), 0.0);
}

double smoothed_box_log(double x, double lo, double hi, double sigma) {
  double d = 0.0;
  if (x < lo) d = lo - x;
  else if (x > hi) d = x - hi;
  return -d * d / (std::sqrt(2.0) * sigma);
}

double hyper_log_prior(const HyperParams& hp) {
  double lp = 0.0;
  for (const LatentTheta& t : hp.thetas) {
    lp += log_normal_density(t.mean_offset, 100.0);
    lp += log_lognormal_density(t.mean_width());
    lp += log_lognormal_density(t.lengthscale());
    lp += log_lognormal_density(t.outputscale());
    lp += smoothed_box_log(t.jitter(), kNoiseBoxLo, kNoiseBoxHi, kNoiseBoxSigma);
  }
  for (double g : hp.data_mean) lp += log_normal_density(g, 100.0);
  for (double s : hp.noise_raw)
    lp += smoothed_box_log(softplus(s), kNoiseBoxLo, kNoiseBoxHi, kNoiseBoxSigma);
  return lp;
}

}  // namespace fkl
