#include "permcd/perm_expect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "permcd/errors.hpp"
#include "permcd/parallel.hpp"

namespace permcd {

namespace {

constexpr std::size_t kMonteCarloChunks = 16;

// Elementwise Neumaier summation.
class CompensatedSum {
 public:
  void add(const Mat& x) {
    if (sum_.size() == 0) {
      sum_ = Mat::Zero(x.rows(), x.cols());
      comp_ = Mat::Zero(x.rows(), x.cols());
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double s = sum_(k);
      const double v = x(k);
      const double t = s + v;
      comp_(k) += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      sum_(k) = t;
    }
    ++count_;
  }
  void merge(const CompensatedSum& other) {
    if (other.count_ == 0) return;
    add(other.value());
    count_ += other.count_ - 1;
  }
  Mat value() const { return sum_ + comp_; }
  std::size_t count() const noexcept { return count_; }

 private:
  Mat sum_;
  Mat comp_;
  std::size_t count_ = 0;
};

void require_exact_size(std::size_t n) {
  if (n == 0) throw InvalidParameter("permutation expectation needs n >= 1");
  if (n > kMaxExactDimension) {
    throw InvalidParameter("exact enumeration refused for n=" + std::to_string(n) + " (limit " +
                           std::to_string(kMaxExactDimension) + ")");
  }
}

CompensatedSum enumerate_first(std::size_t n, std::size_t first, const PermutationFunctional& f) {
  std::vector<std::size_t> rest;
  rest.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != first) rest.push_back(i);
  }
  CompensatedSum acc;
  std::vector<std::size_t> pi(n);
  do {
    pi[0] = first;
    std::copy(rest.begin(), rest.end(), pi.begin() + 1);
    acc.add(f(Permutation(pi)));
  } while (std::next_permutation(rest.begin(), rest.end()));
  return acc;
}

Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

StructuredHessian hessian_for(double delta, double eps, const Vec& d) {
  return StructuredHessian(delta, eps, eps == 0.0 ? Vec(Vec::Zero(d.size())) : d);
}

Mat outer_ones(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return Mat::Ones(m, m);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

ExpectationReport exact_report(std::string name, std::size_t n, double err) {
  ExpectationReport r;
  r.identity = std::move(name);
  r.n = n;
  r.max_abs_error = err;
  r.passed = err <= kExactTolerance;
  return r;
}

double max_abs(const Mat& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

std::string describe(const ExpectationMode& mode) {
  if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) {
    return "montecarlo(" + std::to_string(mc->samples) + ")";
  }
  return "exact";
}

// ---------------------------------------------------------------------------

Mat enumerate_expectation(std::size_t n, const PermutationFunctional& f, const ParallelOptions& par) {
  require_exact_size(n);
  std::vector<CompensatedSum> parts(n);
  parallel_for(n, par.threads, [&](std::size_t first) { parts[first] = enumerate_first(n, first, f); });
  CompensatedSum total;
  for (const auto& p : parts) total.merge(p);
  return total.value() / static_cast<double>(factorial(n));
}

Mat enumerate_conditional(std::size_t n, std::size_t first, const PermutationFunctional& f) {
  require_exact_size(n);
  if (first >= n) throw InvalidParameter("conditional index out of range");
  const CompensatedSum acc = enumerate_first(n, first, f);
  return acc.value() / static_cast<double>(acc.count());
}

MonteCarloEstimate monte_carlo_expectation(std::size_t n, const PermutationFunctional& f,
                                           std::size_t samples, std::uint64_t seed,
                                           const ParallelOptions& par) {
  if (n == 0) throw InvalidParameter("permutation expectation needs n >= 1");
  if (samples < 2) throw InvalidParameter("Monte Carlo needs at least 2 samples");

  struct Part {
    CompensatedSum first;
    CompensatedSum second;
  };
  std::vector<Part> parts(kMonteCarloChunks);
  parallel_for(kMonteCarloChunks, par.threads, [&](std::size_t c) {
    const std::size_t count = samples / kMonteCarloChunks + (c < samples % kMonteCarloChunks ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c), 0x6d63u};
    std::mt19937_64 rng(seq);
    for (std::size_t s = 0; s < count; ++s) {
      const Mat x = f(Permutation::random(n, rng));
      parts[c].first.add(x);
      parts[c].second.add(x.cwiseProduct(x));
    }
  });

  CompensatedSum first, second;
  for (const auto& p : parts) {
    first.merge(p.first);
    second.merge(p.second);
  }
  const double N = static_cast<double>(samples);
  MonteCarloEstimate est;
  est.samples = samples;
  est.mean = first.value() / N;
  const Mat var = ((second.value() - N * est.mean.cwiseProduct(est.mean)) / (N - 1.0)).cwiseMax(0.0);
  est.std_error = (var / N).cwiseSqrt();
  return est;
}

Mat expect(std::size_t n, const PermutationFunctional& f, const ExpectationMode& mode,
           const ParallelOptions& par) {
  if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) {
    return monte_carlo_expectation(n, f, mc->samples, mc->seed, par).mean;
  }
  return enumerate_expectation(n, f, par);
}

// ---------------------------------------------------------------------------

namespace {

PermutationFunctional congruence(const StructuredHessian& H, const Mat& X) {
  return [&H, &X](const Permutation& P) -> Mat {
    const Mat G = permuted_epoch_matrix(H, P);
    return G.transpose() * X * G;
  };
}

void check_square(const StructuredHessian& H, const Mat& X) {
  const auto n = static_cast<Eigen::Index>(H.size());
  if (X.rows() != n || X.cols() != n) throw InvalidParameter("expect_epoch: matrix size mismatch");
}

}  // namespace

Mat expect_epoch(const StructuredHessian& H, const Mat& X, const ExpectationMode& mode,
                 const ParallelOptions& par) {
  check_square(H, X);
  return symmetrize(expect(H.size(), congruence(H, X), mode, par));
}

MonteCarloEstimate expect_epoch_mc(const StructuredHessian& H, const Mat& X, std::size_t samples,
                                   std::uint64_t seed, const ParallelOptions& par) {
  check_square(H, X);
  MonteCarloEstimate est = monte_carlo_expectation(H.size(), congruence(H, X), samples, seed, par);
  est.mean = symmetrize(est.mean);
  return est;
}

std::vector<Mat> abar_sequence(const StructuredHessian& H, std::size_t T, const ExpectationMode& mode,
                               const ParallelOptions& par) {
  std::vector<Mat> seq;
  seq.reserve(T + 1);
  seq.push_back(H.dense());
  for (std::size_t t = 1; t <= T; ++t) {
    ExpectationMode step = mode;
    if (auto* mc = std::get_if<MonteCarloMode>(&step)) {
      mc->seed = mc->seed ^ (0x9e3779b97f4a7c15ull * t);
    }
    seq.push_back(expect_epoch(H, seq.back(), step, par));
  }
  return seq;
}

std::vector<double> expected_f_curve(const StructuredHessian& H, const Vec& x0, std::size_t T,
                                     const ExpectationMode& mode, const ParallelOptions& par) {
  if (static_cast<std::size_t>(x0.size()) != H.size()) {
    throw InvalidParameter("expected_f_curve: x0 length mismatch");
  }
  std::vector<double> out;
  for (const Mat& A : abar_sequence(H, T, mode, par)) out.push_back(0.5 * x0.dot(A * x0));
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form checks
// ---------------------------------------------------------------------------

std::vector<ExpectationReport> verify_basic_identities(std::size_t n) {
  if (n < 2 || n > kMaxExactDimension) throw InvalidParameter("verify_basic_identities: need 2 <= n <= 8");
  const auto m = static_cast<Eigen::Index>(n);
  const Mat I = Mat::Identity(m, m);
  std::vector<ExpectationReport> out;

  // P 1 = 1 for every P.
  {
    const Mat dev = enumerate_expectation(n, [&](const Permutation& P) -> Mat {
      return (P.scatter(Vec::Ones(m)) - Vec::Ones(m)).cwiseAbs();
    });
    out.push_back(exact_report("ones_fixed", n, max_abs(dev)));
  }
  // E P e_j = 1/n for every j: collect all columns at once.
  {
    const Mat mean = enumerate_expectation(n, [](const Permutation& P) -> Mat { return P.matrix(); });
    out.push_back(exact_report("mean_column", n, max_abs(mean - Mat::Constant(m, m, 1.0 / static_cast<double>(n)))));
  }
  // E[P e_2 | P e_1 = e_i] = (1 - e_i)/(n-1).
  {
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Mat cond = enumerate_conditional(n, i, [&](const Permutation& P) -> Mat {
        return I.col(static_cast<Eigen::Index>(P[1]));
      });
      Vec expected = Vec::Constant(m, 1.0 / static_cast<double>(n - 1));
      expected(static_cast<Eigen::Index>(i)) = 0.0;
      err = std::max(err, max_abs(cond - expected));
    }
    out.push_back(exact_report("conditional_second_column", n, err));
  }
  // E P F P^T = (1 1^T - I)/n.
  {
    const Mat F = shift_matrix(n);
    const Mat mean = enumerate_expectation(n, [&](const Permutation& P) -> Mat {
      const Mat Pm = P.matrix();
      return Pm * F * Pm.transpose();
    });
    const Mat expected = (outer_ones(n) - I) / static_cast<double>(n);
    out.push_back(exact_report("conjugated_shift", n, max_abs(mean - expected)));
  }
  return out;
}

ExpectationReport verify_pfpdp(std::size_t n, const Vec& d) {
  if (n < 2 || n > kMaxExactDimension) throw InvalidParameter("verify_pfpdp: need 2 <= n <= 8");
  if (d.size() != static_cast<Eigen::Index>(n)) throw InvalidParameter("verify_pfpdp: d length mismatch");
  const auto m = static_cast<Eigen::Index>(n);
  const Mat F = shift_matrix(n);
  const Mat D = d.asDiagonal();

  const Mat mean = enumerate_expectation(n, [&](const Permutation& P) -> Mat {
    const Mat Pm = P.matrix();
    return Pm * F.transpose() * Pm.transpose() * D * Pm.col(0);
  });
  // P F P^T D P e_1 vanishes for every P; sum of magnitudes over all P.
  const double forward = max_abs(enumerate_expectation(n, [&](const Permutation& P) -> Mat {
                           const Mat Pm = P.matrix();
                           return (Pm * F * Pm.transpose() * D * Pm.col(0)).cwiseAbs();
                         })) *
                         static_cast<double>(factorial(n));

  const double d_av = d.mean();
  const Vec expected =
      (Vec::Constant(m, d_av) - d / static_cast<double>(n)) / static_cast<double>(n - 1);
  return exact_report("shifted_diagonal_pick", n, std::max(max_abs(mean - expected), forward));
}

// ---------------------------------------------------------------------------
// Remainder-order checks
// ---------------------------------------------------------------------------

Mat leading_epoch_term(double delta, double eps, const Vec& d, const Permutation& P) {
  const std::size_t n = P.size();
  const auto m = static_cast<Eigen::Index>(n);
  if (d.size() != m) throw InvalidParameter("leading_epoch_term: d length mismatch");
  const Mat I = Mat::Identity(m, m);
  const Vec ones = Vec::Ones(m);
  const Mat F = shift_matrix(n);
  const Mat DP = P.gather(d).asDiagonal();

  const Mat centered = I - I.col(0) * ones.transpose();
  Mat out = centered + eps * (-DP + F.transpose() * DP) * centered;
  Mat delta_part = F.transpose();
  if (m >= 2) delta_part -= I.col(1) * ones.transpose();
  out += delta * delta_part;
  return out;
}

Mat leading_identity_term(std::size_t n, double delta, double eps, const Vec& d) {
  const auto m = static_cast<Eigen::Index>(n);
  const double nn = static_cast<double>(n);
  const Mat I = Mat::Identity(m, m);
  const Vec ones = Vec::Ones(m);
  const Mat J = outer_ones(n);
  const Mat sym = d * ones.transpose() + ones * d.transpose();
  return I + (1.0 - 2.0 / nn) * J +
         eps * (-2.0 * (1.0 + 1.0 / nn) * Mat(d.asDiagonal()) +
                (3.0 * nn - 2.0) / (nn * (nn - 1.0)) * sym - 2.0 * nn / (nn - 1.0) * d.mean() * J) -
         delta * (2.0 / nn) * I;
}

Mat leading_diagonal_term(std::size_t n, double delta, double eps, const Vec& d) {
  const auto m = static_cast<Eigen::Index>(n);
  const double nn = static_cast<double>(n);
  const Vec ones = Vec::Ones(m);
  const Mat J = outer_ones(n);
  const Mat D = d.asDiagonal();
  const Mat D2 = d.cwiseProduct(d).asDiagonal();
  const Mat sym = ones * d.transpose() + d * ones.transpose();
  const double d_av = d.mean();
  const double d_av2 = d.squaredNorm() / nn;
  return (D + d_av * J - sym / nn) - delta * (2.0 / nn) * D +
         eps * (-2.0 * (1.0 + 1.0 / nn) * D2 - d_av / (nn - 1.0) * sym - 2.0 * d_av2 * J +
                (2.0 / nn) * d * d.transpose() +
                (2.0 * nn - 1.0) / (nn * (nn - 1.0)) * (J * D2 + D2 * J));
}

Mat leading_rank_two_term(std::size_t n, double delta, double eps, const Vec& d, const Vec& v) {
  const auto m = static_cast<Eigen::Index>(n);
  const double nn = static_cast<double>(n);
  const Vec ones = Vec::Ones(m);
  const Mat J = outer_ones(n);
  const double sv = v.sum();
  const Vec dv = d.cwiseProduct(v);
  const Mat eps_part = (d * v.transpose() + v * d.transpose()) / nn -
                       sv / (nn * (nn - 1.0)) * (d * ones.transpose() + ones * d.transpose()) +
                       (dv * ones.transpose() + ones * dv.transpose()) / (nn * (nn - 1.0));
  const Mat delta_part = (ones * v.transpose() + v * ones.transpose()) / (nn - 1.0) -
                         2.0 * sv / (nn * (nn - 1.0)) * J;
  return -eps * eps_part - delta * delta_part;
}

ExpectationReport verify_cp_expansion(std::size_t n, double delta, double eps, const Vec& d,
                                      std::size_t samples, std::uint64_t seed) {
  const StructuredHessian full = hessian_for(delta, eps, d);
  const StructuredHessian half = hessian_for(delta / 2.0, eps / 2.0, d);
  if (full.size() != n) throw InvalidParameter("verify_cp_expansion: d length mismatch");
  const double scale = std::max(delta, eps);
  const double norm = scale * scale * (1.0 + std::sqrt(static_cast<double>(n)));

  auto residual = [](const StructuredHessian& H, const Permutation& P) {
    const Mat R = epoch_matrix(H, P) / (1.0 - H.delta()) - leading_epoch_term(H.delta(), H.eps(), H.d(), P);
    return spectral_norm(R);
  };

  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::vector<double> ratios;
  for (std::size_t s = 0; s < samples; ++s) {
    const Permutation P = Permutation::random(n, rng);
    const double r_full = residual(full, P);
    const double r_half = residual(half, P);
    worst = std::max(worst, r_full);
    if (r_full > 0.0) ratios.push_back(r_half / r_full);
  }

  ExpectationReport r;
  r.identity = "epoch_expansion";
  r.n = n;
  r.delta = delta;
  r.eps = eps;
  r.mode = "sampled(" + std::to_string(samples) + ")";
  r.tolerance = kRemainderConstant;
  r.max_abs_error = worst / norm;
  if (!ratios.empty()) r.scaling_ratio = median(ratios);
  r.passed = r.max_abs_error <= kRemainderConstant &&
             (!r.scaling_ratio || (*r.scaling_ratio >= kRatioLow && *r.scaling_ratio <= kRatioHigh));
  return r;
}

std::vector<ExpectationReport> verify_lemma_leading_terms(std::size_t n, double delta, double eps,
                                                          const Vec& d, const Vec& v) {
  if (n < 3 || n > 7) throw InvalidParameter("verify_lemma_leading_terms: need 3 <= n <= 7");
  const auto m = static_cast<Eigen::Index>(n);
  if (d.size() != m || v.size() != m) throw InvalidParameter("verify_lemma_leading_terms: length mismatch");
  const double nn = static_cast<double>(n);
  const Mat I = Mat::Identity(m, m);
  const Vec ones = Vec::Ones(m);
  const Mat J = outer_ones(n);
  std::vector<ExpectationReport> out;

  // Exact sub-identities.
  {
    const Mat mean = enumerate_expectation(n, [&](const Permutation& P) -> Mat {
      const Mat Pm = P.matrix();
      const Mat left = I - ones * I.row(0);
      const Mat right = I - I.col(0) * ones.transpose();
      return Pm * left * right * Pm.transpose();
    });
    out.push_back(exact_report("centered_projection_mean", n, max_abs(mean - (I + (1.0 - 2.0 / nn) * J))));
  }
  {
    const Mat mean = enumerate_expectation(n, [&](const Permutation& P) -> Mat {
      const Vec last = I.col(static_cast<Eigen::Index>(P[n - 1]));
      const Vec first = I.col(static_cast<Eigen::Index>(P[0]));
      return last * v.transpose() * (I - first * ones.transpose());
    });
    const double sv = v.sum();
    const Mat expected = ones * v.transpose() / nn - sv / (nn * (nn - 1.0)) * J +
                         v * ones.transpose() / (nn * (nn - 1.0));
    out.push_back(exact_report("last_first_outer_mean", n, max_abs(mean - expected)));
  }

  // Leading-term expansions: residual at (delta, eps) and at half scale.
  const StructuredHessian full = hessian_for(delta, eps, d);
  const StructuredHessian half = hessian_for(delta / 2.0, eps / 2.0, d);
  const Mat W = ones * v.transpose() + v * ones.transpose();
  const double root = std::sqrt(nn);
  const double scale = std::max(delta, eps);

  struct Case {
    std::string name;
    Mat X;
    std::function<Mat(const StructuredHessian&)> lead;
    double norm;
  };
  const std::vector<Case> cases = {
      {"identity_congruence", I,
       [&](const StructuredHessian& H) { return leading_identity_term(n, H.delta(), H.eps(), d); },
       (1.0 + root) * (1.0 + root)},
      {"diagonal_congruence", Mat(d.asDiagonal()),
       [&](const StructuredHessian& H) { return leading_diagonal_term(n, H.delta(), H.eps(), d); },
       (1.0 + root) * (1.0 + root)},
      {"rank_two_congruence", W,
       [&](const StructuredHessian& H) { return leading_rank_two_term(n, H.delta(), H.eps(), d, v); },
       root * std::max(v.norm(), 1e-300) * (1.0 + root) * (1.0 + root)},
      {"ones_congruence", J, [&](const StructuredHessian&) { return Mat(Mat::Zero(m, m)); }, 1.0},
  };

  for (const Case& c : cases) {
    auto residual = [&](const StructuredHessian& H) {
      const double k = (1.0 - H.delta()) * (1.0 - H.delta());
      const Mat E = expect_epoch(H, c.X, ExactMode{}) / k;
      return spectral_norm(E - c.lead(H));
    };
    const double r_full = residual(full);
    const double r_half = residual(half);
    ExpectationReport r;
    r.identity = c.name;
    r.n = n;
    r.delta = delta;
    r.eps = eps;
    r.tolerance = kRemainderConstant;
    r.max_abs_error = r_full / (scale * scale * c.norm);
    if (r_full > 0.0) r.scaling_ratio = r_half / r_full;
    r.passed = r.max_abs_error <= kRemainderConstant &&
               (!r.scaling_ratio || (*r.scaling_ratio >= kRatioLow && *r.scaling_ratio <= kRatioHigh));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace permcd
