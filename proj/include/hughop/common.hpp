#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace hughop {

inline constexpr const char* kVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-chain random stream. Every random draw in the library goes through one.
using Rng = std::mt19937_64;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or intermediate value.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class NoHessianError : public Error {
 public:
  using Error::Error;
};

class NoExactSamplerError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Cholesky / eigen factorisation failed. `pivot` is the failing pivot
/// (triangular factor) or the offending eigenvalue (spectral factor).
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, int index, double pivot)
      : Error(what), index_(index), pivot_(pivot) {}
  int index() const { return index_; }
  double pivot() const { return pivot_; }

 private:
  int index_;
  double pivot_;
};

/// Raised inside a trajectory when the state stops being finite. Kernels catch
/// it and turn the step into a rejection.
class TrajectoryError : public Error {
 public:
  TrajectoryError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// splitmix64 finaliser; used to derive independent child seeds from a master
/// seed: child(seed, k) = splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15).
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

inline Vector standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Metropolis-Hastings accept test on a log ratio.
inline bool accept_log_ratio(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  if (!(log_ratio > -std::numeric_limits<double>::infinity())) return false;
  return std::log(uniform01(rng)) < log_ratio;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace hughop
