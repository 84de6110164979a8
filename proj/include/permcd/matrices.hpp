#pragma once

// Structured Hessian families for coordinate-descent experiments:
//
//   spike          A   = delta I + (1-delta) 1 1^T
//   perturbed      A_e = delta I + (1-delta) 1 1^T + eps D,   D = diag(d),
//                        min d = 0, max d = 1
//   spiked eigvec  B_u = delta I + (1-delta) u u^T
//
// with A_e = U^{-1} B_u U^{-1} for U = diag(u). Structured operations are
// O(n); dense copies are built on demand only, up to kMaxDenseDimension.

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "permcd/permutation.hpp"

namespace permcd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr std::size_t kMaxDenseDimension = 2000;
inline constexpr double kNormalizationTol = 1e-12;

// ---------------------------------------------------------------------------
// Diagonal-weight generators
// ---------------------------------------------------------------------------

/// d_i = i/(n-1), i = 0..n-1.
struct Linspace {};
/// i.i.d. U(0,1) draws from `seed`, affinely rescaled to min 0 / max 1.
struct SeededUniformRescaled {
  std::uint64_t seed = 0;
};
/// Caller-supplied weights; must already satisfy the min/max normalization.
struct ExplicitWeights {
  Vec values;
};
using DiagSpec = std::variant<Linspace, SeededUniformRescaled, ExplicitWeights>;

/// |u_i| uniform in [sqrt(delta/(delta+eps)), 1] with both ends attained.
struct SeededUniformInBand {
  std::uint64_t seed = 0;
};
struct ExplicitEigvec {
  Vec values;
};
using EigvecSpec = std::variant<SeededUniformInBand, ExplicitEigvec>;

/// Short label (e.g. "linspace", "uniform:7") recorded in experiment provenance.
std::string describe(const DiagSpec& spec);
std::string describe(const EigvecSpec& spec);

// ---------------------------------------------------------------------------
// StructuredHessian
// ---------------------------------------------------------------------------

/// A_e = delta I + (1-delta) 1 1^T + eps diag(d), stored as (n, delta, eps, d).
/// Immutable after construction.
class StructuredHessian {
 public:
  /// Validates delta in (0, n/(n-1)), eps >= 0, and the d normalization
  /// (min 0 / max 1 within kNormalizationTol when eps > 0, all-zero when eps == 0).
  StructuredHessian(double delta, double eps, Vec d);

  std::size_t size() const noexcept { return static_cast<std::size_t>(d_.size()); }
  double delta() const noexcept { return delta_; }
  double eps() const noexcept { return eps_; }
  const Vec& d() const noexcept { return d_; }

  /// (A_e)_ii = 1 + eps d_i
  double diagonal(std::size_t i) const { return 1.0 + eps_ * d_(static_cast<Eigen::Index>(i)); }
  double d_av() const { return d_.mean(); }
  double d_av2() const { return d_.squaredNorm() / static_cast<double>(size()); }

  Mat dense() const;

 private:
  double delta_;
  double eps_;
  Vec d_;
};

StructuredHessian build_perturbed_identity(std::size_t n, double delta, double eps,
                                           const DiagSpec& d_spec);

/// The eps = 0 member of the family.
StructuredHessian build_spike(std::size_t n, double delta);

// ---------------------------------------------------------------------------
// SpikedEigvecMatrix
// ---------------------------------------------------------------------------

/// B_u = delta I + (1-delta) u u^T
struct SpikedEigvecMatrix {
  double delta = 0.0;
  double eps = 0.0;  // band parameter u was generated for
  Vec u;

  std::size_t size() const noexcept { return static_cast<std::size_t>(u.size()); }
  Mat dense() const;
};

struct SpikedEigvecPair {
  SpikedEigvecMatrix spiked;
  /// U^{-1} B_u U^{-1}, i.e. d_i = (delta/u_i^2 - delta)/eps.
  StructuredHessian companion;
};

SpikedEigvecPair build_spiked_eigvec(std::size_t n, double delta, double eps,
                                     const EigvecSpec& u_spec);

// ---------------------------------------------------------------------------
// Splitting and epoch matrix
// ---------------------------------------------------------------------------

/// P^T A_e P = lower + diag(diag) + lower^T with `lower` strictly lower triangular.
struct Split {
  Mat lower;
  Vec diag;
};

Split split_permuted(const StructuredHessian& H, const Permutation& P);

/// C_P = -(L_P + Delta_P)^{-1} L_P^T by structured forward substitution, O(n^2).
Mat epoch_matrix(const StructuredHessian& H, const Permutation& P);

/// P C_P P^T: maps the iterate across one epoch that visits pi(0), pi(1), ...
Mat permuted_epoch_matrix(const StructuredHessian& H, const Permutation& P);

/// The strictly lower all-ones matrix E.
Mat strict_lower_ones(std::size_t n);

/// Superdiagonal shift F (ones on the first superdiagonal).
Mat shift_matrix(std::size_t n);

/// Lbar = -(I + (1-delta) E)^{-1} in closed form.
Mat lbar(std::size_t n, double delta);

// ---------------------------------------------------------------------------
// Checks and evaluation
// ---------------------------------------------------------------------------

/// Elementwise  delta I + (1-delta) 1 1^T <= A <= (1+eps)(delta' I + (1-delta') 1 1^T),
/// delta' = (delta+eps)/(1+eps).
bool sandwich_check(const Mat& A, double delta, double eps);
bool sandwich_check(const StructuredHessian& H);

/// f(x) = x^T A_e x / 2 in O(n).
double quad_value(const StructuredHessian& H, const Vec& x);

}  // namespace permcd
