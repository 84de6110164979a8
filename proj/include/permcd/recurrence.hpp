#pragma once

// Four-term bounding recurrence for the expected RPCD Hessian.
//
// The expected Hessian after t epochs is dominated by
//   eta I + nu 1 1^T + epsv D + tau (1 r^T + r 1^T),  ||r|| <= 1,
// whose coefficients evolve as q(t+1) = max(0, (1-delta)^2 Mhat q(t)).
// Remainder constants of the underlying expansions are unknown; they are
// bounded in magnitude by rho_bar.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "permcd/matrices.hpp"

namespace permcd {

struct Quadruplet {
  double eta = 0.0;
  double nu = 0.0;
  double epsv = 0.0;
  double tau = 0.0;

  double max_component() const;
  Eigen::Vector4d as_vector() const { return {eta, nu, epsv, tau}; }
};

struct RegimeParams {
  std::size_t n = 0;
  double delta = 0.0;
  double eps = 0.0;
  double rho_bar = 1.0;
};

/// 3.05 + 2.1 r + 0.6 r^2 + 0.01 r^3
double rhohat(double rho_bar);

struct RegimeCheck {
  bool ok = false;
  std::vector<std::string> violations;
  explicit operator bool() const noexcept { return ok; }
};

/// 0 < delta <= eps, rhohat eps^2 <= delta/2, n eps <= 1, n >= 5.
RegimeCheck regime_check(const RegimeParams& p);

struct AllEqualRho {
  double value = 1.0;
};
/// Ten remainder slots in row-major order: four in the eta row, three in the
/// nu row, three in the tau row.
struct ExplicitRho {
  std::array<double, 10> values{};
};
using RhoAssignment = std::variant<AllEqualRho, ExplicitRho>;

/// Rows and columns ordered (eta, nu, epsv, tau).
Eigen::Matrix4d mhat(const RegimeParams& p, double d_av, const RhoAssignment& rho);
Eigen::Matrix4d mhat(const RegimeParams& p, double d_av);

/// (delta, 1 - delta, eps, 0)
Quadruplet initial_quadruplet(const RegimeParams& p);

/// q(0..T). Switches to long double once a nonzero component drops below 1e-200.
std::vector<Quadruplet> iterate_quadruplet(const Quadruplet& q0, const RegimeParams& p, double d_av,
                                           std::size_t T);
std::vector<Quadruplet> iterate_quadruplet(const Quadruplet& q0, const RegimeParams& p, double d_av,
                                           std::size_t T, const RhoAssignment& rho);

/// Geometric mean of max_component ratios over the last `window` steps.
double tail_ratio(const std::vector<Quadruplet>& q, std::size_t window = 10);

/// Largest-modulus eigenvalue of (1-delta)^2 Mhat.
double dominant_growth(const RegimeParams& p, double d_av);

struct BoundSeq {
  std::vector<double> eta_bar;  // 1.5 rhohat (1 - 1.4 delta)^t t delta
  std::vector<double> eps_bar;  // (1 - 1.8 delta)^t eps
};

BoundSeq bound_sequences(const RegimeParams& p, std::size_t T);

struct BoundViolation {
  std::size_t t = 0;
  std::string bound;
  double value = 0.0;
  double limit = 0.0;
};

struct HatbarReport {
  /// eta, epsv, nu and the looser tau bound all hold for t = 1..T.
  bool passed = false;
  /// The tighter tau bound (factor 0.5 eps instead of 0.1) also holds.
  bool tight_tau_holds = false;
  std::vector<BoundViolation> violations;
  /// max over t and bounds of value / limit (0/0 counted as 0).
  double worst_ratio = 0.0;
};

HatbarReport check_hatbar_bounds(const std::vector<Quadruplet>& q, const BoundSeq& bounds,
                                 const RegimeParams& p);

/// C (1 - 1.4 delta)^t t eps ||x0||^2 for t = 1..T (index 0 holds t = 1).
std::vector<double> conv_envelope(const RegimeParams& p, double x0_norm, std::size_t T, double C);

/// Smallest C such that the envelope dominates fvals[t] for 1 <= t <= t_fit.
double fit_envelope_constant(const std::vector<double>& fvals, const RegimeParams& p, double x0_norm,
                             std::size_t t_fit);

/// lambda_max(Abar) <= eta + n nu + epsv + 2 sqrt(n) tau (relative slack 1e-12).
bool abar_norm_bound(const Mat& abar, const Quadruplet& q, std::size_t n);

/// Smallest candidate rho_bar for which abar_norm_bound holds at every
/// t <= abar.size() - 1, or nullopt.
std::optional<double> calibrate_rho_bar(const StructuredHessian& H, const std::vector<Mat>& abar,
                                        const std::vector<double>& candidates);

}  // namespace permcd
