#pragma once

// Expectations over uniformly random permutations: exact enumeration for
// small n, Monte Carlo otherwise. Drives the expected-Hessian recursion
//
//   Abar(t) = E_P[ G_P^T Abar(t-1) G_P ],  G_P = P C_P P^T,  Abar(0) = A,
//
// and checks the closed-form permutation identities numerically.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "permcd/matrices.hpp"
#include "permcd/permutation.hpp"

namespace permcd {

inline constexpr std::size_t kMaxExactDimension = 8;

struct ExactMode {};
struct MonteCarloMode {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};
using ExpectationMode = std::variant<ExactMode, MonteCarloMode>;

std::string describe(const ExpectationMode& mode);

/// Worker count for enumeration and sampling; 0 means hardware concurrency.
/// Results do not depend on it.
struct ParallelOptions {
  unsigned threads = 0;
};

using PermutationFunctional = std::function<Mat(const Permutation&)>;

/// E_P[f(P)] over all n! permutations (n <= kMaxExactDimension), with
/// compensated accumulation in a fixed partition by the first entry.
Mat enumerate_expectation(std::size_t n, const PermutationFunctional& f,
                          const ParallelOptions& par = {});

/// Same, restricted to permutations with pi(0) == first.
Mat enumerate_conditional(std::size_t n, std::size_t first, const PermutationFunctional& f);

struct MonteCarloEstimate {
  Mat mean;
  Mat std_error;  // elementwise
  std::size_t samples = 0;
};

MonteCarloEstimate monte_carlo_expectation(std::size_t n, const PermutationFunctional& f,
                                           std::size_t samples, std::uint64_t seed,
                                           const ParallelOptions& par = {});

Mat expect(std::size_t n, const PermutationFunctional& f, const ExpectationMode& mode,
           const ParallelOptions& par = {});

// ---------------------------------------------------------------------------
// Recursion
// ---------------------------------------------------------------------------

/// E_P[G_P^T X G_P], symmetrized. Exact mode rejects n > kMaxExactDimension.
Mat expect_epoch(const StructuredHessian& H, const Mat& X, const ExpectationMode& mode,
                 const ParallelOptions& par = {});

MonteCarloEstimate expect_epoch_mc(const StructuredHessian& H, const Mat& X, std::size_t samples,
                                   std::uint64_t seed, const ParallelOptions& par = {});

/// Abar(0..T). In Monte Carlo mode each step uses its own derived seed.
std::vector<Mat> abar_sequence(const StructuredHessian& H, std::size_t T,
                               const ExpectationMode& mode, const ParallelOptions& par = {});

/// x0^T Abar(t) x0 / 2 for t = 0..T.
std::vector<double> expected_f_curve(const StructuredHessian& H, const Vec& x0, std::size_t T,
                                     const ExpectationMode& mode, const ParallelOptions& par = {});

// ---------------------------------------------------------------------------
// Identity checks
// ---------------------------------------------------------------------------

inline constexpr double kExactTolerance = 1e-12;
inline constexpr double kRemainderConstant = 10.0;
inline constexpr double kRatioLow = 0.15;
inline constexpr double kRatioHigh = 0.6;

struct ExpectationReport {
  std::string identity;
  double max_abs_error = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  double eps = 0.0;
  std::string mode = "exact";
  double tolerance = kExactTolerance;
  bool passed = false;
  /// Residual at half scale over residual at full scale (remainder checks).
  std::optional<double> scaling_ratio;
};

/// Mean column, conditional second column and conjugated shift. 2 <= n <= 8.
std::vector<ExpectationReport> verify_basic_identities(std::size_t n);

/// Expected shifted diagonal pick, and the vanishing of its transpose form.
ExpectationReport verify_pfpdp(std::size_t n, const Vec& d);

/// First-order expansion of (1-delta)^{-1} C_P over `samples` random P.
/// max_abs_error is max ||R||_2 / (eps^2 (1 + sqrt n)); scaling_ratio is the
/// median of ||R(delta/2, eps/2)|| / ||R(delta, eps)|| over the same P.
ExpectationReport verify_cp_expansion(std::size_t n, double delta, double eps, const Vec& d,
                                      std::size_t samples = 50, std::uint64_t seed = 0);

/// Exact sub-identities plus the leading-term expansions of the expected
/// congruences of I, D, 1 v^T + v 1^T and 1 1^T. 3 <= n <= 7.
std::vector<ExpectationReport> verify_lemma_leading_terms(std::size_t n, double delta, double eps,
                                                          const Vec& d, const Vec& v);

/// Leading-term expansions, exposed for direct testing. Each approximates
/// (1-delta)^{-2} E_P[G_P^T X G_P] for the X named.
Mat leading_identity_term(std::size_t n, double delta, double eps, const Vec& d);
Mat leading_diagonal_term(std::size_t n, double delta, double eps, const Vec& d);
Mat leading_rank_two_term(std::size_t n, double delta, double eps, const Vec& d, const Vec& v);

/// Leading terms of (1-delta)^{-1} C_P.
Mat leading_epoch_term(double delta, double eps, const Vec& d, const Permutation& P);

}  // namespace permcd
