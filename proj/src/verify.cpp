#include "permcd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "permcd/cd_engine.hpp"
#include "permcd/matrices.hpp"
#include "permcd/output.hpp"
#include "permcd/perm_expect.hpp"
#include "permcd/rates.hpp"
#include "permcd/recurrence.hpp"

namespace permcd {

namespace {

std::string params(std::size_t n, double delta, double eps) {
  std::ostringstream os;
  os << "n=" << n << " delta=" << format_double(delta) << " eps=" << format_double(eps);
  return os.str();
}

VerifyCheck from_report(const char* suite, const ExpectationReport& r) {
  VerifyCheck c;
  c.suite = suite;
  c.name = r.identity;
  c.params = params(r.n, r.delta, r.eps) + " mode=" + r.mode;
  c.value = r.max_abs_error;
  c.limit = r.tolerance;
  c.passed = r.passed;
  return c;
}

void append(VerifyReport& into, VerifyReport&& from) {
  for (auto& c : from.checks) into.checks.push_back(std::move(c));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Scales x so that 1/2 x^T A x = 1.
Vec unit_energy(const Mat& A, Vec x) { return x / std::sqrt(0.5 * x.dot(A * x)); }

}  // namespace

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::Identities: return "identities";
    case Suite::Lemmas: return "lemmas";
    case Suite::Recurrence: return "recurrence";
    case Suite::FirstIter: return "firstiter";
    case Suite::Scaling: return "scaling";
    case Suite::All: return "all";
  }
  return "unknown";
}

std::optional<Suite> parse_suite(std::string_view name) {
  for (Suite s : {Suite::Identities, Suite::Lemmas, Suite::Recurrence, Suite::FirstIter, Suite::Scaling, Suite::All}) {
    if (name == to_string(s)) return s;
  }
  if (name == "first-iter") return Suite::FirstIter;
  return std::nullopt;
}

bool VerifyReport::passed() const { return failures() == 0; }

std::size_t VerifyReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.passed; }));
}

std::size_t tail_horizon(double delta) {
  return std::max(kRecurrenceT, static_cast<std::size_t>(std::ceil(20.0 / delta)));
}

// ---------------------------------------------------------------------------

VerifyReport verify_identities(const VerifyOptions&) {
  VerifyReport rep;
  for (std::size_t n = 3; n <= 6; ++n) {
    for (const auto& r : verify_basic_identities(n)) rep.checks.push_back(from_report("identities", r));
    const StructuredHessian H = build_perturbed_identity(n, 0.1, 0.1, Linspace{});
    rep.checks.push_back(from_report("identities", verify_pfpdp(n, H.d())));
    const Vec v = Vec::LinSpaced(static_cast<Eigen::Index>(n), -1.0, 1.0);
    for (const auto& r : verify_lemma_leading_terms(n, 0.1, 0.1, H.d(), v)) {
      if (r.tolerance == kExactTolerance) rep.checks.push_back(from_report("identities", r));
    }
  }
  return rep;
}

VerifyReport verify_lemmas(const VerifyOptions&) {
  constexpr std::size_t n = 6;
  constexpr double delta = 0.05;
  const StructuredHessian H = build_perturbed_identity(n, delta, delta, Linspace{});
  const Vec v = Vec::LinSpaced(static_cast<Eigen::Index>(n), -1.0, 1.0).normalized();

  VerifyReport rep;
  std::vector<double> ratios;
  auto add = [&](const ExpectationReport& r) {
    rep.checks.push_back(from_report("lemmas", r));
    if (r.scaling_ratio) {
      VerifyCheck c;
      c.suite = "lemmas";
      c.name = r.identity + ".halving_ratio";
      c.params = rep.checks.back().params;
      c.value = *r.scaling_ratio;
      c.limit = kRatioHigh;
      c.passed = *r.scaling_ratio >= kRatioLow && *r.scaling_ratio <= kRatioHigh;
      rep.checks.push_back(c);
      ratios.push_back(*r.scaling_ratio);
    }
  };
  for (const auto& r : verify_lemma_leading_terms(n, delta, delta, H.d(), v)) {
    if (r.tolerance != kExactTolerance) add(r);
  }
  add(verify_cp_expansion(n, delta, delta, H.d()));

  VerifyCheck med;
  med.suite = "lemmas";
  med.name = "median_halving_ratio";
  med.params = params(n, delta, delta);
  med.value = ratios.empty() ? 0.0 : median_of(ratios);
  med.limit = kRatioHigh;
  med.passed = !ratios.empty() && med.value >= kRatioLow && med.value <= kRatioHigh;
  rep.checks.push_back(med);
  return rep;
}

VerifyReport verify_recurrence(const VerifyOptions& opts) {
  VerifyReport rep;
  for (double delta : {1e-3, 3e-3, 5e-3, 1e-2}) {
    const StructuredHessian H = build_perturbed_identity(kRecurrenceN, delta, delta, Linspace{});
    for (double rho_bar : {0.0, 0.5, 1.0}) {
      const RegimeParams p{kRecurrenceN, delta, delta, rho_bar};
      const std::string where = params(kRecurrenceN, delta, delta) + " rho_bar=" + format_double(rho_bar);
      if (!regime_check(p).ok) continue;

      const auto q = iterate_quadruplet(initial_quadruplet(p), p, H.d_av(), tail_horizon(delta));
      const HatbarReport hb = check_hatbar_bounds(q, bound_sequences(p, kRecurrenceT), p);
      rep.checks.push_back({"recurrence", "hatbar_bounds", where + " T=500", hb.worst_ratio, 1.0, hb.passed});

      const double deficit = (1.0 - tail_ratio(q)) / delta;
      rep.checks.push_back({"recurrence", "tail_ratio_deficit_over_delta",
                            where + " T=" + std::to_string(q.size() - 1), deficit, kTailHigh,
                            deficit >= kTailLow && deficit <= kTailHigh});
    }
  }

  // Exact expected objective against simulated RPCD means.
  constexpr std::size_t n = 5;
  constexpr std::size_t T = 10;
  constexpr std::size_t runs = 20000;
  const StructuredHessian H = build_perturbed_identity(n, 0.1, 0.1, Linspace{});
  const Vec x0 = make_x0(n, StdNormalX0{}, 0);
  const auto exact = expected_f_curve(H, x0, T, ExactMode{}, {opts.threads});
  std::vector<double> sum(T + 1, 0.0), sum_sq(T + 1, 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto trace = run_epochs(H, x0, Ordering::RandomPermutation, T, r);
    for (std::size_t t = 0; t <= T; ++t) {
      sum[t] += trace.fvals[t];
      sum_sq[t] += trace.fvals[t] * trace.fvals[t];
    }
  }
  double worst = 0.0;
  for (std::size_t t = 0; t <= T; ++t) {
    const double mean = sum[t] / runs;
    const double var = std::max(0.0, sum_sq[t] / runs - mean * mean) * runs / (runs - 1);
    const double se = std::sqrt(var / runs);
    const double gap = std::abs(mean - exact[t]);
    // At t = 0 every run starts from x0, so the gap must vanish.
    const double z = se > 0.0 ? gap / se : (gap <= 1e-12 * std::abs(exact[t]) ? 0.0 : HUGE_VAL);
    worst = std::max(worst, z);
  }
  rep.checks.push_back({"recurrence", "expected_curve_vs_simulation",
                        params(n, 0.1, 0.1) + " T=10 runs=20000", worst, 3.0, worst <= 3.0});
  return rep;
}

VerifyReport verify_first_iter(const VerifyOptions&) {
  constexpr std::size_t n = 100;
  constexpr double delta = 0.01;
  const StructuredHessian H = build_perturbed_identity(n, delta, delta, Linspace{});
  std::mt19937_64 rng(0x66697273);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::size_t step_violations = 0;
  std::size_t mean_violations = 0;
  double worst = 0.0;
  double worst_mean = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const Vec x0 = make_x0(n, StdNormalX0{}, rng());
    const FirstIterBounds b = first_iter_bounds(H, x0, pick(rng));
    worst = std::max(worst, b.f1_actual / b.f1_bound);
    worst_mean = std::max(worst_mean, b.expected_actual / b.expected_bound);
    if (b.f1_actual > b.f1_bound * (1.0 + 1e-12)) ++step_violations;
    if (b.expected_actual > b.expected_bound * (1.0 + 1e-12)) ++mean_violations;
  }
  VerifyReport rep;
  const std::string where = params(n, delta, delta) + " draws=1000";
  rep.checks.push_back({"firstiter", "single_step_bound", where, worst, 1.0, step_violations == 0});
  rep.checks.push_back({"firstiter", "averaged_step_bound", where, worst_mean, 1.0, mean_violations == 0});
  return rep;
}

VerifyReport verify_scaling(const VerifyOptions&) {
  VerifyReport rep;
  std::mt19937_64 rng(0x7363616c);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;

  double dense_gap = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto n = static_cast<Eigen::Index>(5 + rng() % 36);
    Mat G(n, n);
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = normal(rng);
    const Mat A = G * G.transpose() + 0.1 * Mat::Identity(n, n);
    Vec f(n), x0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      f(i) = 0.2 + 4.8 * unit(rng);
      x0(i) = normal(rng);
    }
    std::vector<std::size_t> seq(200);
    for (auto& i : seq) i = rng() % static_cast<std::size_t>(n);
    dense_gap = std::max(dense_gap, scaled_twin_run(A, f, unit_energy(A, x0), seq).max_gap);
  }
  rep.checks.push_back({"scaling", "dense_twin_gap", "instances=20 steps=200", dense_gap, kTwinTolerance,
                        dense_gap <= kTwinTolerance});

  double spiked_gap = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 20 + rng() % 81;
    const double delta = std::pow(10.0, -3.0 + 2.0 * unit(rng));
    const double eps = delta * (1.0 + 4.0 * unit(rng));
    const auto pair = build_spiked_eigvec(n, delta, eps, SeededUniformInBand{rng()});
    const Vec x0 = unit_energy(pair.spiked.dense(), make_x0(n, StdNormalX0{}, rng()));
    const std::uint64_t seed = rng();
    const Ordering s = static_cast<Ordering>(inst % 3);
    const auto a = run_epochs(CoordinateModel::from(pair.spiked), x0, s, 5, seed);
    const auto b = run_epochs(pair.companion, pair.spiked.u.cwiseProduct(x0), s, 5, seed);
    for (std::size_t t = 0; t < std::min(a.fvals.size(), b.fvals.size()); ++t) {
      spiked_gap = std::max(spiked_gap, std::abs(a.fvals[t] - b.fvals[t]));
    }
    if (a.fvals.size() != b.fvals.size()) spiked_gap = HUGE_VAL;
  }
  rep.checks.push_back({"scaling", "spiked_vs_companion_gap", "instances=20 epochs=5", spiked_gap,
                        kTwinTolerance, spiked_gap <= kTwinTolerance});
  return rep;
}

VerifyReport run_verify(Suite suite, const VerifyOptions& opts) {
  switch (suite) {
    case Suite::Identities: return verify_identities(opts);
    case Suite::Lemmas: return verify_lemmas(opts);
    case Suite::Recurrence: return verify_recurrence(opts);
    case Suite::FirstIter: return verify_first_iter(opts);
    case Suite::Scaling: return verify_scaling(opts);
    case Suite::All: break;
  }
  VerifyReport all;
  for (Suite s : {Suite::Identities, Suite::Lemmas, Suite::Recurrence, Suite::FirstIter, Suite::Scaling}) {
    append(all, run_verify(s, opts));
  }
  return all;
}

// ---------------------------------------------------------------------------

void write_verify_json(std::ostream& os, Suite suite, const VerifyReport& report) {
  nlohmann::ordered_json out;
  out["suite"] = std::string(to_string(suite));
  out["passed"] = report.passed();
  out["failures"] = report.failures();
  out["build_id"] = std::string(build_id());
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json j;
    j["suite"] = c.suite;
    j["name"] = c.name;
    j["params"] = c.params;
    j["value"] = std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json(format_double(c.value));
    j["limit"] = c.limit;
    j["passed"] = c.passed;
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);
  os << out.dump(2) << '\n';
}

void write_verify_csv(std::ostream& os, const VerifyReport& report) {
  CsvWriter csv(os, {"suite", "name", "params", "value", "limit", "passed", "build_id"});
  for (const auto& c : report.checks) {
    csv.row({c.suite, c.name, c.params, format_double(c.value), format_double(c.limit), c.passed ? "true" : "false",
             std::string(build_id())});
  }
}

}  // namespace permcd
