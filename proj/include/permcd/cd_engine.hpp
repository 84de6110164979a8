#pragma once

// Coordinate descent with exact line search on f(x) = x^T A x / 2.
//
// Structured Hessians are handled through CoordinateModel, the common
// diag + rank-one form A = diag(a) + c w w^T, which covers both the perturbed
// family (w = 1) and the spiked-eigenvector family (w = u). One coordinate
// step is O(1) given the cached s = w^T x.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "permcd/matrices.hpp"
#include "permcd/permutation.hpp"

namespace permcd {

enum class Ordering { Cyclic, UniformRandom, RandomPermutation, DiagonalWeighted };

std::string_view to_string(Ordering o);
/// Accepts "ccd"/"cyclic", "rcd"/"uniform", "rpcd"/"permutation", "weighted".
std::optional<Ordering> parse_ordering(std::string_view name);

/// A = diag(a) + c w w^T
struct CoordinateModel {
  Vec a;
  double c = 0.0;
  Vec w;

  static CoordinateModel from(const StructuredHessian& H);
  static CoordinateModel from(const SpikedEigvecMatrix& B);

  std::size_t size() const noexcept { return static_cast<std::size_t>(a.size()); }
  double diagonal(std::size_t i) const { return a(i) + c * w(i) * w(i); }
  double value(const Vec& x) const;
};

struct CdState {
  Vec x;
  double coord_sum = 0.0;  // w^T x (1^T x for the perturbed family)
  double fval = 0.0;

  static CdState make(const StructuredHessian& H, Vec x);
  static CdState make(const CoordinateModel& M, Vec x);
};

/// Exact minimization along coordinate i (0-based):
///   x_i <- -(1-delta)(s - x_i)/(1 + eps d_i).
CdState cd_step(const StructuredHessian& H, CdState state, std::size_t i);

/// In-place step on the general model; fval is updated by the exact decrease
/// g_i^2 / (2 A_ii).
void cd_step(const CoordinateModel& M, CdState& state, std::size_t i);

// ---------------------------------------------------------------------------
// Starting points
// ---------------------------------------------------------------------------

struct StdNormalX0 {};
struct OnesX0 {};
struct ExplicitX0 {
  Vec values;
};
using X0Spec = std::variant<StdNormalX0, OnesX0, ExplicitX0>;

std::string describe(const X0Spec& spec);

/// StdNormal draws from a stream of `seed` that is independent of the
/// ordering stream used by run_epochs.
Vec make_x0(std::size_t n, const X0Spec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Epoch runs
// ---------------------------------------------------------------------------

inline constexpr double kUnderflowThreshold = 1e-280;

struct RunOptions {
  /// Stop (without flagging) once f drops below this.
  double stop_below = 0.0;
  /// Keep the realized coordinate order of every epoch.
  bool record_orders = false;
};

struct TraceParams {
  std::size_t n = 0;
  double delta = 0.0;
  double eps = 0.0;
  std::string d_spec;
  std::string x0_spec;
};

struct EpochTrace {
  std::vector<double> fvals;  // fvals[0] = f(x0), then one per epoch boundary
  std::uint64_t seed = 0;
  Ordering strategy = Ordering::Cyclic;
  TraceParams params;
  /// f fell below kUnderflowThreshold; the last entry is that value and the
  /// run stopped there.
  bool truncated = false;
  Vec final_x;
  std::vector<std::vector<std::size_t>> orders;
};

/// Deterministic in (seed, strategy, x0). Each epoch is n coordinate steps;
/// f and s are recomputed from x at every epoch boundary.
EpochTrace run_epochs(const CoordinateModel& M, const Vec& x0, Ordering strategy,
                      std::size_t epochs, std::uint64_t seed, const RunOptions& opts = {});

EpochTrace run_epochs(const StructuredHessian& H, const Vec& x0, Ordering strategy,
                      std::size_t epochs, std::uint64_t seed, const RunOptions& opts = {});

/// P C_P P^T x, the dense one-epoch map for the order pi(0), pi(1), ...
Vec epoch_via_matrix(const StructuredHessian& H, const Permutation& P, const Vec& x);

// ---------------------------------------------------------------------------
// Diagonal-scaling twin run
// ---------------------------------------------------------------------------

struct TwinRunResult {
  std::vector<double> fvals;         // on A from x0
  std::vector<double> fvals_scaled;  // on F^{-1} A F^{-1} from F x0
  double max_gap = 0.0;              // max_k |f_k - f~_k|
  double max_iterate_gap = 0.0;      // max_k ||x~_k - F x_k||_inf
};

/// Dense CD on A and on F^{-1} A F^{-1} replaying the same index sequence.
TwinRunResult scaled_twin_run(const Mat& A, const Vec& f_diag, const Vec& x0,
                              const std::vector<std::size_t>& index_seq);

/// Dense exact-line-search CD step, x_i <- x_i - (A x)_i / A_ii.
void dense_cd_step(const Mat& A, Vec& x, std::size_t i);

}  // namespace permcd
