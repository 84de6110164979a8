#include "unit/helpers.hpp"

#include <cmath>

#include "permcd/cd_engine.hpp"
#include "permcd/errors.hpp"
#include "permcd/rates.hpp"

using namespace permcd;

namespace {

struct PredictedEntry {
  double delta;
  double eps;
  double deficit;
};

// Reference predicted RCD deficits, eps = delta and eps = sqrt(delta/10).
const PredictedEntry kPredicted[] = {
    {1e-3, 1e-3, 1.9940e-3}, {3e-3, 3e-3, 5.9466e-3}, {1e-2, 1e-2, 1.9419e-2},
    {3e-2, 3e-2, 5.5047e-2}, {1e-1, 1e-1, 1.5364e-1},
    {1e-3, 1e-2, 1.9763e-3}, {3e-3, 0.017320508075688773, 5.8634e-3}, {1e-2, 0.031622776601683794, 1.9019e-2},
    {3e-2, 0.054772255750516613, 5.3824e-2}, {1e-1, 1e-1, 1.5364e-1},
};

}  // namespace

TEST_SUITE("rates") {
  TEST_CASE("predicted RCD deficits match four reference digits") {
    for (const auto& e : kPredicted) {
      INFO("delta=" << e.delta << " eps=" << e.eps);
      const double deficit = 1.0 - rcd_predicted_rate(100, e.delta, e.eps);
      CHECK(std::abs(deficit - e.deficit) <= 0.5e-4 * e.deficit);
    }
  }

  TEST_CASE("naive and nonuniform rates") {
    CHECK(1.0 - rcd_naive_rate(100, 0.01, 0.0) == doctest::Approx(0.00995).epsilon(1e-3));
    CHECK(rcd_naive_rate(100, 1e-14, 0.0) == doctest::Approx(1.0));
    CHECK(rcd_nonuniform_rate(100, 0.01, 0.05, 1.0) == doctest::Approx(rcd_naive_rate(100, 0.01, 0.05)));
    CHECK(rcd_nonuniform_rate(100, 0.01, 0.05, 0.0) == doctest::Approx(std::pow(1.0 - 0.01 / 100, 100)));
    CHECK_THROWS_AS(rcd_predicted_rate(0, 0.1, 0.1), InvalidParameter);
    CHECK_THROWS_AS(rcd_naive_rate(10, 0.0, 0.1), InvalidParameter);
  }

  TEST_CASE("Sun-Ye cyclic bound") {
    const double deficit = 1.0 - ccd_bound_suny(100, 1e-3, 1e-3);
    // First branch delta / (n (n(1-delta) + delta + eps)) is the active one.
    const double first = 1e-3 / (100.0 * (100.0 * (1 - 1e-3) + 2e-3));
    CHECK(deficit == doctest::Approx(first).epsilon(1e-12));
    CHECK(deficit == doctest::Approx(1.0e-7).epsilon(0.01));
    CHECK(deficit > 1e-3 / 1e4);
  }

  TEST_CASE("power iteration agrees with the dense solve on small instances") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit;
    int agreed = 0;
    for (int inst = 0; inst < 20; ++inst) {
      const std::size_t n = 5 + rng() % 16;
      const double delta = 0.2 + 0.6 * unit(rng);
      const auto H = build_perturbed_identity(n, delta, 0.5 * unit(rng), SeededUniformRescaled{rng()});
      const Mat C = epoch_matrix(H, Permutation::identity(n));
      const SpectralRate s = spectral_rate(C);
      INFO("n=" << n << " delta=" << delta << " gap=" << s.relative_gap);
      CHECK(s.power_converged);
      CHECK(s.relative_gap <= kSpectralAgreement);
      CHECK(s.warning.empty());
      if (s.relative_gap <= kSpectralAgreement) ++agreed;
    }
    CHECK(agreed == 20);
  }

  TEST_CASE("power iteration on a rotation-dominated matrix") {
    // Dominant complex pair of modulus 0.9 next to a real 0.5.
    Mat C = Mat::Zero(3, 3);
    C(0, 0) = 0.9 * std::cos(0.3);
    C(0, 1) = -0.9 * std::sin(0.3);
    C(1, 0) = 0.9 * std::sin(0.3);
    C(1, 1) = 0.9 * std::cos(0.3);
    C(2, 2) = 0.5;
    const PowerResult p = power_spectral_radius(C);
    CHECK(p.converged);
    CHECK(p.radius == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(dense_spectral_radius(C) == doctest::Approx(0.9).epsilon(1e-14));
  }

  TEST_CASE("unconverged power iteration falls back with a warning") {
    const auto H = build_perturbed_identity(100, 1e-3, 1e-3, Linspace{});
    PowerOptions opts;
    opts.max_iterations = 200;
    const SpectralRate s = ccd_spectral_rate(H, opts);
    CHECK_FALSE(s.power_converged);
    CHECK_FALSE(s.warning.empty());
    CHECK(s.rate == doctest::Approx(std::pow(dense_spectral_radius(epoch_matrix(H, Permutation::identity(100))), 2)));
  }

  TEST_CASE("cyclic spectral deficits track the reference row") {
    const double reference[] = {5.9018e-6, 1.7170e-5, 6.0912e-5, 1.9453e-4, 7.5546e-4};
    const double deltas[] = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    PowerOptions quick;
    quick.max_iterations = 10;
    for (int k = 0; k < 5; ++k) {
      const auto H = build_perturbed_identity(100, deltas[k], deltas[k], Linspace{});
      const double deficit = 1.0 - ccd_spectral_rate(H, quick).rate;
      INFO("delta=" << deltas[k] << " deficit=" << deficit);
      CHECK(deficit > reference[k] / 3.0);
      CHECK(deficit < reference[k] * 3.0);
    }
  }

  TEST_CASE("observed rate") {
    std::vector<double> f;
    for (int t = 0; t <= 30; ++t) f.push_back(4.0 * std::pow(0.93, t));
    CHECK(observed_rate(f) == doctest::Approx(0.93).epsilon(1e-12));
    CHECK(observed_rate(f, 30) == doctest::Approx(0.93).epsilon(1e-12));
    CHECK_THROWS_AS(observed_rate(f, 31), EstimationError);
    CHECK_THROWS_AS(observed_rate(f, 0), EstimationError);

    // Values past an underflow are ignored.
    std::vector<double> g = {1.0, 0.5, 0.25, 0.125, 1e-300};
    CHECK(observed_rate(g, 3) == doctest::Approx(0.5));
    CHECK_THROWS_AS(observed_rate(g, 4), EstimationError);
    std::vector<double> bad = {1.0, 0.0, 0.0};
    CHECK_THROWS_AS(observed_rate(bad, 2), EstimationError);
  }

  TEST_CASE("first-iteration bound") {
    const auto H = build_perturbed_identity(100, 0.01, 0.01, Linspace{});
    std::mt19937_64 rng(41);
    for (int k = 0; k < 200; ++k) {
      const Vec x0 = test::normal_vec(100, rng);
      const FirstIterBounds b = first_iter_bounds(H, x0, rng() % 100);
      CHECK(b.f1_actual <= b.f1_bound * (1.0 + 1e-12));
      CHECK(b.expected_actual <= b.expected_bound * (1.0 + 1e-12));
    }

    Vec e = Vec::Zero(100);
    e(17) = 3.0;
    const FirstIterBounds z = first_iter_bounds(H, e, 17);
    CHECK(z.f1_actual == 0.0);
    CHECK(z.f1_bound == 0.0);

    // eps = 0 with x0 = 1 reduces the bound to a closed form.
    const auto S = build_spike(100, 0.01);
    const FirstIterBounds s = first_iter_bounds(S, Vec::Ones(100), 5);
    const double expected = 0.5 * 0.01 * 99 + 0.5 * 0.01 * 0.99 * 99 * 99;
    CHECK(s.f1_bound == doctest::Approx(expected).epsilon(1e-13));

    // The i-average is exact, not sampled.
    const Vec x0 = test::normal_vec(100, rng);
    double avg = 0.0;
    for (std::size_t i = 0; i < 100; ++i) avg += first_iter_bounds(H, x0, i).f1_actual / 100.0;
    CHECK(first_iter_expected(H, x0).expected_actual == doctest::Approx(avg).epsilon(1e-12));
    CHECK_THROWS_AS(first_iter_bounds(H, x0, 100), InvalidParameter);
  }
}
