#include "permcd/matrices.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "permcd/errors.hpp"

namespace permcd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dense_size(std::size_t n) {
  if (n > kMaxDenseDimension) {
    throw InvalidParameter("dense materialization refused for n=" + std::to_string(n) +
                           " (limit " + std::to_string(kMaxDenseDimension) + ")");
  }
}

void require_delta(std::size_t n, double delta) {
  if (n == 0) throw InvalidParameter("n must be >= 1");
  const double upper = n == 1 ? std::numeric_limits<double>::infinity()
                              : static_cast<double>(n) / static_cast<double>(n - 1);
  if (!(delta > 0.0) || !(delta < upper)) {
    throw InvalidParameter("delta=" + std::to_string(delta) + " outside (0, n/(n-1))");
  }
}

// Affine map of `v` onto [0, 1] (min -> 0, max -> 1). Needs a non-constant v.
Vec rescale_unit(const Vec& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi > lo)) throw InvalidParameter("cannot rescale a constant vector to [0, 1]");
  Vec out = (v.array() - lo) / (hi - lo);
  // Pin the extremes exactly; the affine map can leave 1 - ulp at the top.
  Eigen::Index imin = 0, imax = 0;
  v.minCoeff(&imin);
  v.maxCoeff(&imax);
  out(imin) = 0.0;
  out(imax) = 1.0;
  return out;
}

Vec uniform_draws(std::size_t n, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6d617472u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
  return v;
}

}  // namespace

std::string describe(const DiagSpec& spec) {
  return std::visit(
      overloaded{
          [](const Linspace&) { return std::string("linspace"); },
          [](const SeededUniformRescaled& s) { return "uniform:" + std::to_string(s.seed); },
          [](const ExplicitWeights& e) { return "explicit[" + std::to_string(e.values.size()) + "]"; },
      },
      spec);
}

std::string describe(const EigvecSpec& spec) {
  return std::visit(
      overloaded{
          [](const SeededUniformInBand& s) { return "band:" + std::to_string(s.seed); },
          [](const ExplicitEigvec& e) { return "explicit[" + std::to_string(e.values.size()) + "]"; },
      },
      spec);
}

// ---------------------------------------------------------------------------

StructuredHessian::StructuredHessian(double delta, double eps, Vec d)
    : delta_(delta), eps_(eps), d_(std::move(d)) {
  const std::size_t n = size();
  require_delta(n, delta_);
  if (!(eps_ >= 0.0) || !std::isfinite(eps_)) {
    throw InvalidParameter("eps=" + std::to_string(eps_) + " must be finite and >= 0");
  }
  if (!d_.allFinite()) throw InvalidParameter("d has non-finite entries");
  if (eps_ == 0.0 || d_.size() == 1) {
    // A single weight cannot span [0, 1]; it is pinned to 0 like the eps = 0 case.
    if (d_.cwiseAbs().maxCoeff() != 0.0) {
      throw InvalidParameter(eps_ == 0.0 ? "eps == 0 requires d == 0" : "n == 1 requires d == 0");
    }
    return;
  }
  if (std::abs(d_.minCoeff()) > kNormalizationTol || std::abs(d_.maxCoeff() - 1.0) > kNormalizationTol) {
    throw InvalidParameter("d must satisfy min d = 0 and max d = 1 (got min " +
                           std::to_string(d_.minCoeff()) + ", max " +
                           std::to_string(d_.maxCoeff()) + ")");
  }
}

Mat StructuredHessian::dense() const {
  require_dense_size(size());
  const auto n = static_cast<Eigen::Index>(size());
  Mat A = Mat::Constant(n, n, 1.0 - delta_);
  A.diagonal().array() += delta_ + eps_ * d_.array();
  return A;
}

StructuredHessian build_perturbed_identity(std::size_t n, double delta, double eps,
                                           const DiagSpec& d_spec) {
  require_delta(n, delta);
  if (!(eps >= 0.0)) throw InvalidParameter("eps must be >= 0");
  const auto len = static_cast<Eigen::Index>(n);

  Vec d = std::visit(
      overloaded{
          [&](const Linspace&) -> Vec {
            if (n == 1) return Vec::Zero(1);
            return Vec::LinSpaced(len, 0.0, 1.0);
          },
          [&](const SeededUniformRescaled& s) -> Vec {
            if (n == 1) return Vec::Zero(1);
            return rescale_unit(uniform_draws(n, s.seed));
          },
          [&](const ExplicitWeights& e) -> Vec {
            if (e.values.size() != len) {
              throw InvalidParameter("explicit d has length " + std::to_string(e.values.size()) +
                                     ", expected " + std::to_string(n));
            }
            return e.values;
          },
      },
      d_spec);

  if (eps == 0.0) d.setZero();
  return StructuredHessian(delta, eps, std::move(d));
}

StructuredHessian build_spike(std::size_t n, double delta) {
  return build_perturbed_identity(n, delta, 0.0, Linspace{});
}

// ---------------------------------------------------------------------------

Mat SpikedEigvecMatrix::dense() const {
  require_dense_size(size());
  Mat B = (1.0 - delta) * u * u.transpose();
  B.diagonal().array() += delta;
  return B;
}

SpikedEigvecPair build_spiked_eigvec(std::size_t n, double delta, double eps,
                                     const EigvecSpec& u_spec) {
  if (n == 0) throw InvalidParameter("n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
  if (!(eps > 0.0) || !(delta + eps > 0.0)) throw InvalidParameter("eps must be > 0");
  const double lo = std::sqrt(delta / (delta + eps));

  Vec u = std::visit(
      overloaded{
          [&](const SeededUniformInBand& s) -> Vec {
            if (n == 1) throw InvalidParameter("a band with both ends attained needs n >= 2");
            Vec t = rescale_unit(uniform_draws(n, s.seed));
            Vec out = (lo + (1.0 - lo) * t.array()).matrix();
            Eigen::Index imin = 0;
            t.minCoeff(&imin);
            out(imin) = lo;
            return out;
          },
          [&](const ExplicitEigvec& e) -> Vec {
            if (e.values.size() != static_cast<Eigen::Index>(n)) {
              throw InvalidParameter("explicit u has wrong length");
            }
            return e.values;
          },
      },
      u_spec);

  const Vec mag = u.cwiseAbs();
  if (std::abs(mag.minCoeff() - lo) > kNormalizationTol ||
      std::abs(mag.maxCoeff() - 1.0) > kNormalizationTol) {
    throw InvalidParameter("u must satisfy min |u_i| = sqrt(delta/(delta+eps)) and max |u_i| = 1");
  }

  // delta U^{-2} = delta I + eps D
  Vec d = ((delta / mag.array().square()) - delta) / eps;
  d = d.cwiseMax(0.0).cwiseMin(1.0);
  if (n > 1) {
    // Division by eps amplifies the 1e-12 slack on |u|; pin the extremes.
    Eigen::Index imin = 0;
    Eigen::Index imax = 0;
    mag.minCoeff(&imin);
    mag.maxCoeff(&imax);
    d(imin) = 1.0;
    d(imax) = 0.0;
  } else {
    d.setZero();
  }

  return SpikedEigvecPair{SpikedEigvecMatrix{delta, eps, std::move(u)},
                          StructuredHessian(delta, eps, std::move(d))};
}

// ---------------------------------------------------------------------------

Mat strict_lower_ones(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Mat E = Mat::Zero(m, m);
  E.triangularView<Eigen::StrictlyLower>().setConstant(1.0);
  return E;
}

Mat shift_matrix(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Mat F = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) F(i, i + 1) = 1.0;
  return F;
}

Split split_permuted(const StructuredHessian& H, const Permutation& P) {
  if (P.size() != H.size()) throw InvalidParameter("permutation length does not match n");
  const std::size_t n = H.size();
  Split s;
  s.lower = (1.0 - H.delta()) * strict_lower_ones(n);
  s.diag.resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) s.diag(k) = H.diagonal(P[k]);
  return s;
}

Mat epoch_matrix(const StructuredHessian& H, const Permutation& P) {
  if (P.size() != H.size()) throw InvalidParameter("permutation length does not match n");
  const std::size_t n = H.size();
  const auto m = static_cast<Eigen::Index>(n);
  const double off = 1.0 - H.delta();

  Vec pivot(m);
  for (std::size_t k = 0; k < n; ++k) {
    pivot(k) = H.diagonal(P[k]);
    if (!(pivot(k) > std::numeric_limits<double>::min()) || !std::isfinite(pivot(k))) {
      throw NumericalDegeneracy("epoch_matrix: non-positive triangular pivot");
    }
  }

  // Column j solves (off*E + diag(pivot)) c = -off * E^T e_j, where E^T e_j has
  // ones in rows 0..j-1. Row i: pivot_i c_i + off * sum_{k<i} c_k = rhs_i.
  Mat C(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double running = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double rhs = i < j ? -off : 0.0;
      const double c = (rhs - off * running) / pivot(i);
      C(i, j) = c;
      running += c;
    }
  }
  return C;
}

Mat permuted_epoch_matrix(const StructuredHessian& H, const Permutation& P) {
  const Mat C = epoch_matrix(H, P);
  const auto m = C.rows();
  // (P C P^T)_{pi(a), pi(b)} = C_{a,b}
  Mat out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) out(P[a], P[b]) = C(a, b);
  }
  return out;
}

Mat lbar(std::size_t n, double delta) {
  const auto m = static_cast<Eigen::Index>(n);
  Mat L = Mat::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    L(j, j) = -1.0;
    double power = 1.0;  // delta^{i-j-1}
    for (Eigen::Index i = j + 1; i < m; ++i) {
      L(i, j) = (1.0 - delta) * power;
      power *= delta;
    }
  }
  return L;
}

bool sandwich_check(const Mat& A, double delta, double eps) {
  const double delta_up = (delta + eps) / (1.0 + eps);
  const double tol = 1e-12 * (1.0 + A.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double lower = (i == j ? delta : 0.0) + (1.0 - delta);
      const double upper = (1.0 + eps) * ((i == j ? delta_up : 0.0) + (1.0 - delta_up));
      if (A(i, j) < lower - tol || A(i, j) > upper + tol) return false;
    }
  }
  return true;
}

bool sandwich_check(const StructuredHessian& H) {
  return sandwich_check(H.dense(), H.delta(), H.eps());
}

double quad_value(const StructuredHessian& H, const Vec& x) {
  if (x.size() != static_cast<Eigen::Index>(H.size())) {
    throw InvalidParameter("quad_value: length mismatch");
  }
  const double s = x.sum();
  const double sq = x.squaredNorm();
  const double weighted = (H.d().array() * x.array().square()).sum();
  return 0.5 * (H.delta() * sq + (1.0 - H.delta()) * s * s + H.eps() * weighted);
}

}  // namespace permcd
