#pragma once

#include <stdexcept>
#include <string>

namespace fkl {

/// Cholesky factorization failed even after jitter escalation.
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// Training inputs carry no usable spread (e.g. all identical).
struct DegenerateInputs : std::runtime_error {
  explicit DegenerateInputs(const std::string& what) : std::runtime_error(what) {}
};

/// A latent sample contains NaN or infinite entries.
struct NonFiniteLatent : std::runtime_error {
  explicit NonFiniteLatent(const std::string& what) : std::runtime_error(what) {}
};

/// The slice-sampling bracket collapsed; the likelihood is returning
/// NaN or -inf at the current state.
struct NonTerminating : std::runtime_error {
  explicit NonTerminating(const std::string& what) : std::runtime_error(what) {}
};

/// A finite-difference probe produced a non-finite loss value.
struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteEntry : std::runtime_error {
  explicit NonFiniteEntry(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySplit : std::runtime_error {
  explicit EmptySplit(const std::string& what) : std::runtime_error(what) {}
};

/// Test targets have zero variance; SMSE is undefined.
struct DegenerateVariance : std::runtime_error {
  explicit DegenerateVariance(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fkl
