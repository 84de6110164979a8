#include "unit/helpers.hpp"

#include <cmath>

#include "permcd/cd_engine.hpp"
#include "permcd/errors.hpp"

using namespace permcd;
using permcd::test::max_abs;
using permcd::test::vec;

TEST_SUITE("cd_engine") {
  TEST_CASE("single coordinate step") {
    const auto H = build_spike(2, 0.5);
    const CdState s = cd_step(H, CdState::make(H, Vec::Ones(2)), 0);
    CHECK(max_abs(s.x - vec({-0.5, 1.0})) < 1e-15);
    CHECK(s.coord_sum == doctest::Approx(0.5));
    CHECK(s.fval == doctest::Approx(quad_value(H, s.x)));

    const auto Hp = build_perturbed_identity(5, 0.1, 0.2, Linspace{});
    Vec e = Vec::Zero(5);
    e(3) = 2.5;
    CHECK(cd_step(Hp, CdState::make(Hp, e), 3).x.isZero());
    CHECK_THROWS_AS(cd_step(Hp, CdState::make(Hp, e), 5), InvalidParameter);
  }

  TEST_CASE("steps never increase f and zero the partial derivative") {
    std::mt19937_64 rng(11);
    const auto H = build_perturbed_identity(30, 0.05, 0.1, SeededUniformRescaled{1});
    const Mat A = H.dense();
    CdState s = CdState::make(H, test::normal_vec(30, rng));
    for (std::size_t k = 0; k < 200; ++k) {
      const std::size_t i = rng() % 30;
      const double before = s.fval;
      s = cd_step(H, s, i);
      CHECK(s.fval <= before + 1e-14 * std::abs(before));
      CHECK(std::abs((A * s.x)(static_cast<Eigen::Index>(i))) < 1e-12);
    }
    CHECK(s.fval == doctest::Approx(quad_value(H, s.x)).epsilon(1e-10));
  }

  TEST_CASE("general model agrees with the structured step") {
    std::mt19937_64 rng(12);
    const auto H = build_perturbed_identity(12, 0.2, 0.3, Linspace{});
    const CoordinateModel M = CoordinateModel::from(H);
    const Vec x0 = test::normal_vec(12, rng);
    CHECK(M.value(x0) == doctest::Approx(quad_value(H, x0)));
    CdState a = CdState::make(H, x0);
    CdState b = CdState::make(M, x0);
    for (std::size_t k = 0; k < 40; ++k) {
      const std::size_t i = rng() % 12;
      a = cd_step(H, a, i);
      cd_step(M, b, i);
    }
    CHECK(max_abs(a.x - b.x) < 1e-13);
  }

  TEST_CASE("dense step matches the structured step") {
    std::mt19937_64 rng(13);
    const auto H = build_perturbed_identity(8, 0.3, 0.1, Linspace{});
    const Vec x0 = test::normal_vec(8, rng);
    Vec x = x0;
    CdState s = CdState::make(H, x0);
    for (std::size_t i : {3, 1, 7, 0, 3, 5}) {
      dense_cd_step(H.dense(), x, i);
      s = cd_step(H, s, i);
    }
    CHECK(max_abs(x - s.x) < 1e-13);
  }

  TEST_CASE("one cyclic epoch by hand") {
    const auto H = build_spike(2, 0.5);
    const EpochTrace t = run_epochs(H, Vec::Ones(2), Ordering::Cyclic, 1, 0);
    CHECK(max_abs(t.final_x - vec({-0.5, 0.25})) < 1e-15);
    REQUIRE(t.fvals.size() == 2);
    CHECK(t.fvals[0] == doctest::Approx(1.5));
    CHECK(t.fvals[1] == doctest::Approx(0.09375));
    CHECK(max_abs(epoch_via_matrix(H, Permutation::identity(2), Vec::Ones(2)) - vec({-0.5, 0.25})) < 1e-15);
    CHECK(epoch_via_matrix(H, Permutation::identity(2), Vec::Zero(2)).isZero());
  }

  TEST_CASE("one dimension reaches the minimizer in one step") {
    const StructuredHessian H(0.5, 0.0, Vec::Zero(1));
    for (Ordering s : {Ordering::Cyclic, Ordering::UniformRandom, Ordering::RandomPermutation, Ordering::DiagonalWeighted}) {
      const EpochTrace t = run_epochs(H, vec({3.0}), s, 1, 9);
      CHECK(t.final_x(0) == 0.0);
      CHECK(t.fvals.back() == 0.0);
    }
  }

  TEST_CASE("epoch map matches the recorded RPCD order") {
    std::mt19937_64 rng(14);
    const auto H = build_perturbed_identity(9, 0.1, 0.1, SeededUniformRescaled{4});
    const Vec x0 = test::normal_vec(9, rng);
    RunOptions opts;
    opts.record_orders = true;
    const EpochTrace t = run_epochs(H, x0, Ordering::RandomPermutation, 5, 77, opts);
    REQUIRE(t.orders.size() == 5);
    Vec x = x0;
    for (const auto& order : t.orders) {
      x = epoch_via_matrix(H, Permutation(order), x);
    }
    CHECK(max_abs(x - t.final_x) < 1e-12);
  }

  TEST_CASE("orderings") {
    const auto H = build_perturbed_identity(6, 0.1, 0.5, Linspace{});
    RunOptions opts;
    opts.record_orders = true;
    const Vec x0 = Vec::Ones(6);

    const auto cyc = run_epochs(H, x0, Ordering::Cyclic, 3, 1, opts);
    for (const auto& o : cyc.orders) CHECK(o == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});

    const auto perm = run_epochs(H, x0, Ordering::RandomPermutation, 20, 1, opts);
    for (auto o : perm.orders) {
      std::sort(o.begin(), o.end());
      CHECK(o == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    }

    // Diagonal-weighted sampling favors the heavier coordinates.
    const auto w = run_epochs(H, x0, Ordering::DiagonalWeighted, 2000, 1, opts);
    std::vector<double> counts(6, 0.0);
    for (const auto& o : w.orders) {
      for (std::size_t i : o) counts[i] += 1.0;
    }
    const double total = 2000.0 * 6.0;
    const double weight_sum = H.dense().trace();
    for (std::size_t i = 0; i < 6; ++i) {
      const double p = H.diagonal(i) / weight_sum;
      CHECK(std::abs(counts[i] / total - p) < 4.0 * std::sqrt(p * (1 - p) / total));
    }
  }

  TEST_CASE("uniform coordinate sampling") {
    const auto H = build_spike(5, 1e-4);
    RunOptions opts;
    opts.record_orders = true;
    const auto t = run_epochs(H, Vec::Ones(5), Ordering::UniformRandom, 4000, 3, opts);
    REQUIRE_FALSE(t.truncated);
    std::vector<double> counts(5, 0.0);
    for (const auto& o : t.orders) {
      for (std::size_t i : o) counts[i] += 1.0;
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - 4000.0) * (c - 4000.0) / 4000.0;
    CHECK(chi2 < 18.4668);  // chi-square(4) 0.999 quantile
  }

  TEST_CASE("runs are deterministic per seed") {
    const auto H = build_perturbed_identity(40, 0.01, 0.01, Linspace{});
    const Vec x0 = make_x0(40, StdNormalX0{}, 3);
    for (Ordering s : {Ordering::UniformRandom, Ordering::RandomPermutation, Ordering::DiagonalWeighted}) {
      const auto a = run_epochs(H, x0, s, 30, 8);
      const auto b = run_epochs(H, x0, s, 30, 8);
      const auto c = run_epochs(H, x0, s, 30, 9);
      CHECK(a.fvals == b.fvals);
      CHECK(a.fvals != c.fvals);
      CHECK(a.seed == 8);
      CHECK(a.strategy == s);
    }
  }

  TEST_CASE("starting points") {
    CHECK(make_x0(4, OnesX0{}, 0) == Vec::Ones(4));
    CHECK(make_x0(3, ExplicitX0{vec({1, 2, 3})}, 0) == vec({1, 2, 3}));
    CHECK_THROWS_AS(make_x0(4, ExplicitX0{vec({1, 2, 3})}, 0), InvalidParameter);
    CHECK(make_x0(50, StdNormalX0{}, 1) == make_x0(50, StdNormalX0{}, 1));
    CHECK(make_x0(50, StdNormalX0{}, 1) != make_x0(50, StdNormalX0{}, 2));
    CHECK(describe(X0Spec{StdNormalX0{}}) == "stdnormal");
    CHECK(describe(X0Spec{OnesX0{}}) == "ones");
  }

  TEST_CASE("stop threshold and underflow truncation") {
    const auto H = build_perturbed_identity(10, 0.5, 0.5, Linspace{});
    RunOptions opts;
    opts.stop_below = 1e-20;
    const auto stopped = run_epochs(H, Vec::Ones(10), Ordering::Cyclic, 10000, 0, opts);
    CHECK(stopped.fvals.back() < 1e-20);
    CHECK(stopped.fvals.size() < 10001);
    CHECK_FALSE(stopped.truncated);

    const auto deep = run_epochs(H, Vec::Ones(10), Ordering::Cyclic, 10000, 0);
    CHECK(deep.truncated);
    CHECK(deep.fvals.back() < kUnderflowThreshold);
    for (std::size_t k = 0; k + 1 < deep.fvals.size(); ++k) CHECK(deep.fvals[k] >= kUnderflowThreshold);
  }

  TEST_CASE("orderings parse and print") {
    CHECK(parse_ordering("ccd") == Ordering::Cyclic);
    CHECK(parse_ordering("rpcd") == Ordering::RandomPermutation);
    CHECK(parse_ordering("rcd") == Ordering::UniformRandom);
    CHECK(parse_ordering("weighted") == Ordering::DiagonalWeighted);
    CHECK_FALSE(parse_ordering("bogus").has_value());
    CHECK(to_string(Ordering::RandomPermutation) == "rpcd");
  }

  TEST_CASE("diagonal scaling twin runs") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> unit;
    for (int inst = 0; inst < 5; ++inst) {
      const std::size_t n = 10;
      Mat G(10, 10);
      for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = unit(rng) - 0.5;
      const Mat A = G * G.transpose() + 0.5 * Mat::Identity(10, 10);
      Vec f(10);
      for (Eigen::Index i = 0; i < 10; ++i) f(i) = 0.5 + 1.5 * unit(rng);
      std::vector<std::size_t> seq(200);
      for (auto& i : seq) i = rng() % n;
      const Vec x0 = test::normal_vec(n, rng);

      const TwinRunResult same = scaled_twin_run(A, Vec::Ones(10), x0, seq);
      CHECK(same.max_gap == 0.0);
      CHECK(same.fvals == same.fvals_scaled);

      const TwinRunResult r = scaled_twin_run(A, f, x0, seq);
      CHECK(r.fvals.size() == 201);
      CHECK(r.max_gap <= 1e-9);
      CHECK(r.max_iterate_gap <= 1e-9);
    }
  }

  TEST_CASE("spiked eigenvector runs match the companion") {
    const auto pair = build_spiked_eigvec(100, 0.01, 0.05, SeededUniformInBand{3});
    const Vec x0 = make_x0(100, StdNormalX0{}, 1);
    for (Ordering s : {Ordering::Cyclic, Ordering::UniformRandom, Ordering::RandomPermutation}) {
      const auto a = run_epochs(CoordinateModel::from(pair.spiked), x0, s, 3, 21);
      const auto b = run_epochs(pair.companion, pair.spiked.u.cwiseProduct(x0), s, 3, 21);
      REQUIRE(a.fvals.size() == b.fvals.size());
      for (std::size_t t = 0; t < a.fvals.size(); ++t) {
        CHECK(std::abs(a.fvals[t] - b.fvals[t]) <= 1e-10 * std::max(1.0, a.fvals[0]));
      }
    }
  }
}
