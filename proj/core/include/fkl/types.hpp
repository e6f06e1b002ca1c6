#pragma once

#include <Eigen/Dense>

namespace fkl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A sample of the latent log-spectral density g(omega_i), aligned to a
/// FrequencyGrid of the same length. exp(g) is the spectral density.
using LatentSample = Eigen::VectorXd;

}  // namespace fkl
