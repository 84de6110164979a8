#include "permcd/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "permcd/errors.hpp"

namespace permcd {

namespace {

constexpr double kExtendedBelow = 1e-200;
constexpr double kRegimeSlack = 1e-12;

template <class T>
std::array<T, 4> step(const Eigen::Matrix4d& M, double scale, const std::array<T, 4>& q) {
  std::array<T, 4> out{};
  for (int i = 0; i < 4; ++i) {
    T acc = 0;
    for (int j = 0; j < 4; ++j) acc += static_cast<T>(M(i, j)) * q[j];
    out[i] = std::max<T>(T(0), static_cast<T>(scale) * acc);
  }
  return out;
}

template <class T>
Quadruplet to_quad(const std::array<T, 4>& a) {
  return {static_cast<double>(a[0]), static_cast<double>(a[1]), static_cast<double>(a[2]),
          static_cast<double>(a[3])};
}

bool has_tiny(const std::array<double, 4>& a) {
  return std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0 && std::abs(v) < kExtendedBelow; });
}

}  // namespace

double Quadruplet::max_component() const { return std::max({eta, nu, epsv, tau}); }

double rhohat(double rho_bar) {
  if (!(rho_bar >= 0.0)) throw InvalidParameter("rho_bar must be >= 0");
  const double r = rho_bar;
  return 3.05 + 2.1 * r + 0.6 * r * r + 0.01 * r * r * r;
}

RegimeCheck regime_check(const RegimeParams& p) {
  RegimeCheck c;
  const double n = static_cast<double>(p.n);
  if (!(p.delta > 0.0)) c.violations.push_back("delta > 0");
  if (p.delta > p.eps * (1.0 + kRegimeSlack)) c.violations.push_back("delta <= eps");
  if (rhohat(p.rho_bar) * p.eps * p.eps > 0.5 * p.delta * (1.0 + kRegimeSlack)) {
    c.violations.push_back("rhohat*eps^2 <= delta/2");
  }
  if (n * p.eps > 1.0 + kRegimeSlack) c.violations.push_back("n*eps <= 1");
  if (p.n < 5) c.violations.push_back("n >= 5");
  c.ok = c.violations.empty();
  return c;
}

Eigen::Matrix4d mhat(const RegimeParams& p, double d_av, const RhoAssignment& rho) {
  std::array<double, 10> r{};
  if (const auto* all = std::get_if<AllEqualRho>(&rho)) {
    r.fill(all->value);
  } else {
    r = std::get<ExplicitRho>(rho).values;
  }
  if (p.n == 0) throw InvalidParameter("mhat: n must be >= 1");
  const double e = p.eps;
  const double e2 = e * e;
  const double root = 1.0 / std::sqrt(static_cast<double>(p.n));

  Eigen::Matrix4d M;
  M << 1.0 + r[0] * e2, r[1] * e2, 2.0 * e + r[2] * e2, r[3] * e,
       1.0 + r[4] * e2, 0.0, d_av + r[5] * e2, r[6] * e * root,
       0.0, 0.0, 1.0, 0.0,
       r[7] * e * root, 0.0, r[8] * root + r[9] * e2, 0.0;
  return M;
}

Eigen::Matrix4d mhat(const RegimeParams& p, double d_av) { return mhat(p, d_av, AllEqualRho{p.rho_bar}); }

Quadruplet initial_quadruplet(const RegimeParams& p) { return {p.delta, 1.0 - p.delta, p.eps, 0.0}; }

std::vector<Quadruplet> iterate_quadruplet(const Quadruplet& q0, const RegimeParams& p, double d_av,
                                           std::size_t T) {
  return iterate_quadruplet(q0, p, d_av, T, AllEqualRho{p.rho_bar});
}

std::vector<Quadruplet> iterate_quadruplet(const Quadruplet& q0, const RegimeParams& p, double d_av,
                                           std::size_t T, const RhoAssignment& rho) {
  const Eigen::Matrix4d M = mhat(p, d_av, rho);
  const double scale = (1.0 - p.delta) * (1.0 - p.delta);

  std::vector<Quadruplet> out;
  out.reserve(T + 1);
  out.push_back(q0);
  std::array<double, 4> q{q0.eta, q0.nu, q0.epsv, q0.tau};
  std::size_t t = 0;
  for (; t < T && !has_tiny(q); ++t) {
    q = step(M, scale, q);
    out.push_back(to_quad(q));
  }
  if (t < T) {
    std::array<long double, 4> ql{q[0], q[1], q[2], q[3]};
    for (; t < T; ++t) {
      ql = step(M, scale, ql);
      out.push_back(to_quad(ql));
    }
  }
  return out;
}

double tail_ratio(const std::vector<Quadruplet>& q, std::size_t window) {
  if (window == 0 || q.size() < window + 1) throw EstimationError("tail_ratio: sequence shorter than window");
  const double last = q.back().max_component();
  const double first = q[q.size() - 1 - window].max_component();
  if (!(last > 0.0) || !(first > 0.0)) throw EstimationError("tail_ratio: non-positive component");
  return std::pow(last / first, 1.0 / static_cast<double>(window));
}

double dominant_growth(const RegimeParams& p, double d_av) {
  const Eigen::Matrix4d M = (1.0 - p.delta) * (1.0 - p.delta) * mhat(p, d_av);
  Eigen::EigenSolver<Eigen::Matrix4d> es(M);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

BoundSeq bound_sequences(const RegimeParams& p, std::size_t T) {
  BoundSeq b;
  const double rh = rhohat(p.rho_bar);
  double g_eta = 1.0;  // (1 - 1.4 delta)^t
  double g_eps = 1.0;  // (1 - 1.8 delta)^t
  for (std::size_t t = 0; t <= T; ++t) {
    b.eta_bar.push_back(1.5 * rh * g_eta * static_cast<double>(t) * p.delta);
    b.eps_bar.push_back(g_eps * p.eps);
    g_eta *= 1.0 - 1.4 * p.delta;
    g_eps *= 1.0 - 1.8 * p.delta;
  }
  return b;
}

HatbarReport check_hatbar_bounds(const std::vector<Quadruplet>& q, const BoundSeq& bounds,
                                 const RegimeParams& p) {
  const std::size_t T = std::min({q.size(), bounds.eta_bar.size(), bounds.eps_bar.size()});
  const double r = p.rho_bar;
  HatbarReport rep;
  bool tight_ok = true;

  auto test = [&](std::size_t t, const char* name, double value, double limit, bool counted) {
    const bool ok = value <= limit * (1.0 + 1e-12) + 1e-300;
    if (limit > 0.0) {
      rep.worst_ratio = std::max(rep.worst_ratio, value / limit);
    } else if (value > 0.0) {
      rep.worst_ratio = std::numeric_limits<double>::infinity();
    }
    if (!ok) {
      if (counted) rep.violations.push_back({t, name, value, limit});
      return false;
    }
    return true;
  };

  bool all_ok = true;
  for (std::size_t t = 1; t < T; ++t) {
    const double eb = bounds.eta_bar[t];
    const double xb = bounds.eps_bar[t];
    all_ok &= test(t, "eta", q[t].eta, eb, true);
    all_ok &= test(t, "epsv", q[t].epsv, xb, true);
    all_ok &= test(t, "tau", q[t].tau, 0.1 * r * eb + 0.54 * r * xb, true);
    all_ok &= test(t, "nu", q[t].nu, (1.1 + 0.01 * r * r) * eb + (1.1 + 0.1 * r * r) * xb, true);
    const double tight = 0.5 * p.eps * r * eb + 0.54 * r * xb;
    if (!(q[t].tau <= tight * (1.0 + 1e-12) + 1e-300)) tight_ok = false;
  }
  rep.passed = all_ok;
  rep.tight_tau_holds = tight_ok;
  return rep;
}

std::vector<double> conv_envelope(const RegimeParams& p, double x0_norm, std::size_t T, double C) {
  std::vector<double> out;
  out.reserve(T);
  double g = 1.0;
  const double base = p.eps * x0_norm * x0_norm;
  for (std::size_t t = 1; t <= T; ++t) {
    g *= 1.0 - 1.4 * p.delta;
    out.push_back(C * g * static_cast<double>(t) * base);
  }
  return out;
}

double fit_envelope_constant(const std::vector<double>& fvals, const RegimeParams& p, double x0_norm,
                             std::size_t t_fit) {
  const std::vector<double> unit = conv_envelope(p, x0_norm, std::min(t_fit, fvals.size() - 1), 1.0);
  double C = 0.0;
  for (std::size_t t = 1; t <= unit.size(); ++t) {
    if (unit[t - 1] > 0.0) C = std::max(C, fvals[t] / unit[t - 1]);
  }
  return C;
}

bool abar_norm_bound(const Mat& abar, const Quadruplet& q, std::size_t n) {
  Eigen::SelfAdjointEigenSolver<Mat> es(abar, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double nn = static_cast<double>(n);
  const double bound = q.eta + nn * q.nu + q.epsv + 2.0 * std::sqrt(nn) * q.tau;
  return lmax <= bound * (1.0 + 1e-12);
}

std::optional<double> calibrate_rho_bar(const StructuredHessian& H, const std::vector<Mat>& abar,
                                        const std::vector<double>& candidates) {
  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  for (double rho : sorted) {
    const RegimeParams p{H.size(), H.delta(), H.eps(), rho};
    const auto q = iterate_quadruplet(initial_quadruplet(p), p, H.d_av(), abar.empty() ? 0 : abar.size() - 1);
    bool ok = true;
    for (std::size_t t = 0; t < abar.size() && ok; ++t) ok = abar_norm_bound(abar[t], q[t], H.size());
    if (ok) return rho;
  }
  return std::nullopt;
}

}  // namespace permcd
