#pragma once

// Per-epoch rate formulas, the spectral CCD rate, first-iteration bounds and
// the tail-window observed-rate estimator. A "rate" here is the per-epoch
// contraction factor of f; the deficit is 1 - rate.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "permcd/cd_engine.hpp"
#include "permcd/matrices.hpp"

namespace permcd {

/// (1 - 2 delta / (n (1 + eps + delta)))^n
double rcd_predicted_rate(std::size_t n, double delta, double eps);
/// (1 - delta / (n (1 + eps)))^n
double rcd_naive_rate(std::size_t n, double delta, double eps);
/// (1 - delta / (n (1 + d_av eps)))^n, diagonal-weighted sampling.
double rcd_nonuniform_rate(std::size_t n, double delta, double eps, double d_av);
/// Per-epoch CCD upper bound; natural log in the middle branch.
double ccd_bound_suny(std::size_t n, double delta, double eps);

// ---------------------------------------------------------------------------
// Spectral radius of the cyclic epoch matrix
// ---------------------------------------------------------------------------

struct PowerOptions {
  std::size_t max_iterations = 100000;
  double tolerance = 1e-12;
  std::uint64_t seed = 0;
};

struct PowerResult {
  double radius = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Largest eigenvalue modulus by power iteration with a two-term fit
/// y_{k+2} ~ a y_{k+1} + b y_k, so a dominant complex pair is resolved.
PowerResult power_spectral_radius(const Mat& C, const PowerOptions& opts = {});

/// Largest eigenvalue modulus from a dense nonsymmetric eigensolve.
double dense_spectral_radius(const Mat& C);

struct SpectralRate {
  double rate = 0.0;        // rho(C)^2, dense value
  double power_rate = 0.0;  // rho(C)^2 from power iteration (if converged)
  bool power_converged = false;
  double relative_gap = 0.0;  // |rho_power - rho_dense| / rho_dense
  std::string warning;
};

inline constexpr double kSpectralAgreement = 1e-8;

/// rho(C_I)^2 with C_I the cyclic-order epoch matrix.
SpectralRate ccd_spectral_rate(const StructuredHessian& H, const PowerOptions& opts = {});
SpectralRate spectral_rate(const Mat& C, const PowerOptions& opts = {});

// ---------------------------------------------------------------------------
// Observed rate
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultWindow = 10;

/// (f_T / f_{T-w})^{1/w} over the last w epochs of the leading run of finite
/// values >= the underflow threshold.
double observed_rate(const std::vector<double>& fvals, std::size_t window = kDefaultWindow);
double observed_rate(const EpochTrace& trace, std::size_t window = kDefaultWindow);

// ---------------------------------------------------------------------------
// First iteration
// ---------------------------------------------------------------------------

struct FirstIterBounds {
  double f1_actual = 0.0;
  double f1_bound = 0.0;
  /// Average of f after one step over all n choices of coordinate.
  double expected_actual = 0.0;
  double expected_bound = 0.0;
};

FirstIterBounds first_iter_bounds(const StructuredHessian& H, const Vec& x0, std::size_t i);

/// Only the i-independent part: expected_actual and expected_bound.
FirstIterBounds first_iter_expected(const StructuredHessian& H, const Vec& x0);

// ---------------------------------------------------------------------------

struct RateReport {
  Ordering variant = Ordering::Cyclic;
  std::size_t n = 0;
  double delta = 0.0;
  double eps = 0.0;
  double one_minus_rho_observed = 0.0;
  double one_minus_rho_predicted = 0.0;
};

}  // namespace permcd
