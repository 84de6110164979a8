#include "permcd/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "permcd/errors.hpp"

namespace permcd {

namespace {

void require_positive(std::size_t n, double delta) {
  if (n == 0) throw InvalidParameter("n must be >= 1");
  if (!(delta > 0.0)) throw InvalidParameter("delta must be > 0");
}

// (1 - x)^n without losing digits when x is tiny.
double epoch_power(double x, std::size_t n) {
  return std::exp(static_cast<double>(n) * std::log1p(-x));
}

constexpr std::size_t kFitEvery = 10;
constexpr double kFitResidual = 1e-10;

}  // namespace

double rcd_predicted_rate(std::size_t n, double delta, double eps) {
  require_positive(n, delta);
  return epoch_power(2.0 * delta / (static_cast<double>(n) * (1.0 + eps + delta)), n);
}

double rcd_naive_rate(std::size_t n, double delta, double eps) {
  require_positive(n, delta);
  return epoch_power(delta / (static_cast<double>(n) * (1.0 + eps)), n);
}

double rcd_nonuniform_rate(std::size_t n, double delta, double eps, double d_av) {
  require_positive(n, delta);
  return epoch_power(delta / (static_cast<double>(n) * (1.0 + d_av * eps)), n);
}

double ccd_bound_suny(std::size_t n, double delta, double eps) {
  require_positive(n, delta);
  const double nn = static_cast<double>(n);
  const double spread = nn * (1.0 - delta) + delta + eps;
  const double log_factor = 2.0 + std::log(nn) / std::numbers::pi;
  const double a = delta / (nn * spread);
  const double b = delta / (spread * spread * log_factor * log_factor);
  const double c = delta / (nn * nn);
  return 1.0 - std::max({a, b, c});
}

// ---------------------------------------------------------------------------

double dense_spectral_radius(const Mat& C) {
  if (C.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(C, false);
  if (es.info() != Eigen::Success) throw NumericalDegeneracy("dense eigensolve failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

PowerResult power_spectral_radius(const Mat& C, const PowerOptions& opts) {
  const auto n = C.rows();
  PowerResult res;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = normal(rng);
  y.normalize();

  double previous = -1.0;
  Mat basis(n, 2);
  for (std::size_t k = 1; k <= opts.max_iterations; ++k) {
    Vec next = C * y;
    const double norm = next.norm();
    res.iterations = k;
    if (norm == 0.0) {
      res.radius = 0.0;
      res.converged = true;
      return res;
    }
    y = next / norm;
    if (k % kFitEvery != 0) continue;

    const Vec y1 = C * y;
    const Vec y2 = C * y1;
    basis.col(0) = y1;
    basis.col(1) = y;
    const Eigen::ColPivHouseholderQR<Mat> qr(basis);
    double estimate;
    double residual;
    if (qr.rank() < 2) {
      estimate = y1.norm();
      residual = (y1 - y1.dot(y) * y).norm() / std::max(y1.norm(), 1e-300);
    } else {
      const Eigen::Vector2d coef = qr.solve(y2);
      const double a = coef(0);
      const double b = coef(1);
      const double disc = a * a + 4.0 * b;
      if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        estimate = std::max(std::abs(0.5 * (a + r)), std::abs(0.5 * (a - r)));
      } else {
        estimate = std::sqrt(-b);
      }
      residual = (y2 - basis * coef).norm() / std::max(y2.norm(), 1e-300);
    }
    if (residual < kFitResidual && previous >= 0.0 &&
        std::abs(estimate - previous) <= opts.tolerance * std::max(estimate, 1e-300)) {
      res.radius = estimate;
      res.converged = true;
      return res;
    }
    previous = estimate;
    res.radius = estimate;
  }
  return res;
}

SpectralRate spectral_rate(const Mat& C, const PowerOptions& opts) {
  SpectralRate out;
  const double dense = dense_spectral_radius(C);
  out.rate = dense * dense;
  const PowerResult p = power_spectral_radius(C, opts);
  out.power_converged = p.converged;
  out.power_rate = p.radius * p.radius;
  out.relative_gap = dense > 0.0 ? std::abs(p.radius - dense) / dense : std::abs(p.radius);
  if (!p.converged) {
    out.warning = "power iteration did not converge in " + std::to_string(p.iterations) +
                  " steps; using the dense eigensolve";
  } else if (out.relative_gap > kSpectralAgreement) {
    out.warning = "power iteration and dense eigensolve disagree (relative gap " +
                  std::to_string(out.relative_gap) + ")";
  }
  return out;
}

SpectralRate ccd_spectral_rate(const StructuredHessian& H, const PowerOptions& opts) {
  if (H.size() > kMaxDenseDimension) throw InvalidParameter("ccd_spectral_rate: n too large");
  return spectral_rate(epoch_matrix(H, Permutation::identity(H.size())), opts);
}

// ---------------------------------------------------------------------------

double observed_rate(const std::vector<double>& fvals, std::size_t window) {
  if (window == 0) throw EstimationError("observed_rate: window must be >= 1");
  std::size_t valid = 0;
  while (valid < fvals.size() && std::isfinite(fvals[valid]) && fvals[valid] >= kUnderflowThreshold) {
    ++valid;
  }
  if (valid < window + 1) {
    throw EstimationError("observed_rate: " + std::to_string(valid) +
                          " usable values, need " + std::to_string(window + 1));
  }
  const double last = fvals[valid - 1];
  const double first = fvals[valid - 1 - window];
  return std::exp((std::log(last) - std::log(first)) / static_cast<double>(window));
}

double observed_rate(const EpochTrace& trace, std::size_t window) {
  return observed_rate(trace.fvals, window);
}

// ---------------------------------------------------------------------------

FirstIterBounds first_iter_expected(const StructuredHessian& H, const Vec& x0) {
  const std::size_t n = H.size();
  if (static_cast<std::size_t>(x0.size()) != n) throw InvalidParameter("first_iter: x0 length mismatch");
  const double nn = static_cast<double>(n);
  const double de = H.delta() + H.eps();
  const double shrink = de / (1.0 + H.eps());
  const double s = x0.sum();

  FirstIterBounds b;
  const CdState start = CdState::make(H, x0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += quad_value(H, cd_step(H, start, i).x);
  b.expected_actual = total / nn;
  b.expected_bound = de / (2.0 * nn) * (nn - shrink) * x0.squaredNorm() +
                     (nn - 2.0) / nn * (1.0 - H.delta()) * shrink * s * s;
  return b;
}

FirstIterBounds first_iter_bounds(const StructuredHessian& H, const Vec& x0, std::size_t i) {
  FirstIterBounds b = first_iter_expected(H, x0);
  if (i >= H.size()) throw InvalidParameter("first_iter: index out of range");
  const auto k = static_cast<Eigen::Index>(i);
  b.f1_actual = quad_value(H, cd_step(H, CdState::make(H, x0), i).x);

  double off_sq = 0.0;
  double off_sum = 0.0;
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    if (j == k) continue;
    off_sq += (H.delta() + H.eps() * H.d()(j)) * x0(j) * x0(j);
    off_sum += x0(j);
  }
  b.f1_bound = 0.5 * off_sq +
               (1.0 - H.delta()) * (H.delta() + H.eps()) / (2.0 * (1.0 + H.eps())) * off_sum * off_sum;
  return b;
}

}  // namespace permcd
