#include "unit/helpers.hpp"

#include "permcd/errors.hpp"
#include "permcd/matrices.hpp"

using namespace permcd;
using permcd::test::mat2;
using permcd::test::max_abs;
using permcd::test::vec;

namespace {

// Dense oracle for the epoch matrix: -(L + Delta)^{-1} L^T on P^T A P.
Mat dense_epoch(const StructuredHessian& H, const Permutation& P) {
  const Mat Pm = P.matrix();
  const Mat B = Pm.transpose() * H.dense() * Pm;
  const Mat lower = B.triangularView<Eigen::StrictlyLower>();
  const Mat ld = B.triangularView<Eigen::Lower>();
  return -ld.inverse() * lower.transpose();
}

}  // namespace

TEST_SUITE("matrices") {
  TEST_CASE("perturbed identity with explicit weights") {
    const auto H = build_perturbed_identity(2, 0.5, 0.1, ExplicitWeights{vec({0.0, 1.0})});
    CHECK(max_abs(H.dense() - mat2(1.0, 0.5, 0.5, 1.1)) < 1e-15);
    CHECK(H.diagonal(1) == doctest::Approx(1.1));
  }

  TEST_CASE("eps zero collapses to the spike") {
    const auto H = build_perturbed_identity(3, 0.01, 0.0, Linspace{});
    const Mat A = H.dense();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(A(i, j) == doctest::Approx(i == j ? 1.0 : 0.99));
    }
    CHECK(H.d().isZero());
    CHECK(max_abs(build_spike(3, 0.01).dense() - A) == 0.0);
  }

  TEST_CASE("seeded uniform weights hit both ends") {
    const auto H = build_perturbed_identity(100, 0.01, 0.05, SeededUniformRescaled{7});
    const Vec diag = H.dense().diagonal();
    CHECK(diag.minCoeff() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(diag.maxCoeff() == doctest::Approx(1.05).epsilon(1e-14));
    // Deterministic per seed, different across seeds.
    CHECK(build_perturbed_identity(100, 0.01, 0.05, SeededUniformRescaled{7}).d() == H.d());
    CHECK(build_perturbed_identity(100, 0.01, 0.05, SeededUniformRescaled{8}).d() != H.d());
  }

  TEST_CASE("linspace weights") {
    const auto H = build_perturbed_identity(5, 0.1, 0.1, Linspace{});
    CHECK(max_abs(H.d() - vec({0.0, 0.25, 0.5, 0.75, 1.0})) < 1e-15);
    CHECK(H.d_av() == doctest::Approx(0.5));
    CHECK(build_perturbed_identity(1, 0.5, 0.1, Linspace{}).d()(0) == 0.0);
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(build_perturbed_identity(3, 0.0, 0.1, Linspace{}), InvalidParameter);
    CHECK_THROWS_AS(build_perturbed_identity(3, 1.5, 0.1, Linspace{}), InvalidParameter);
    CHECK_NOTHROW(build_perturbed_identity(3, 1.4, 0.1, Linspace{}));
    CHECK_THROWS_AS(build_perturbed_identity(3, 0.1, -0.1, Linspace{}), InvalidParameter);
    CHECK_THROWS_AS(build_perturbed_identity(3, 0.1, 0.1, ExplicitWeights{vec({0.0, 0.5})}), InvalidParameter);
    CHECK_THROWS_AS(build_perturbed_identity(3, 0.1, 0.1, ExplicitWeights{vec({0.1, 0.5, 1.0})}), InvalidParameter);
    CHECK_THROWS_AS(StructuredHessian(0.1, 0.0, vec({0.0, 1.0})), InvalidParameter);
  }

  TEST_CASE("spiked eigenvector matrix") {
    const auto pair = build_spiked_eigvec(2, 0.5, 0.5, ExplicitEigvec{vec({1.0, std::sqrt(0.5)})});
    const double off = 0.5 * std::sqrt(0.5);
    CHECK(max_abs(pair.spiked.dense() - mat2(1.0, off, off, 0.75)) < 1e-15);

    // Narrow band: u is all ones except the pinned lower end.
    Vec u = Vec::Ones(4);
    u(2) = std::sqrt(0.1 / (0.1 + 1e-9));
    const auto narrow = build_spiked_eigvec(4, 0.1, 1e-9, ExplicitEigvec{u});
    CHECK(max_abs(narrow.spiked.dense() - build_spike(4, 0.1).dense()) < 1e-8);
    CHECK(narrow.companion.d()(2) == 1.0);
    CHECK_THROWS_AS(build_spiked_eigvec(4, 0.1, 0.5, ExplicitEigvec{Vec::Ones(4)}), InvalidParameter);
  }

  TEST_CASE("companion of a banded eigenvector") {
    const auto pair = build_spiked_eigvec(100, 0.01, 0.05, SeededUniformInBand{3});
    const Vec& u = pair.spiked.u;
    const double lo = std::sqrt(0.01 / 0.06);
    CHECK(u.cwiseAbs().minCoeff() == doctest::Approx(lo).epsilon(1e-14));
    CHECK(u.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-14));

    const Vec diag = pair.companion.dense().diagonal();
    CHECK(diag.minCoeff() >= 1.0 - 1e-12);
    CHECK(diag.maxCoeff() <= 1.05 + 1e-12);
    // delta u_i^{-2} = delta + eps d_i
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      CHECK(0.01 / (u(i) * u(i)) == doctest::Approx(0.01 + 0.05 * pair.companion.d()(i)).epsilon(1e-12));
    }
    // U^{-1} B U^{-1}
    const Mat Uinv = u.cwiseInverse().asDiagonal();
    CHECK(max_abs(Uinv * pair.spiked.dense() * Uinv - pair.companion.dense()) < 1e-12);
  }

  TEST_CASE("split of the permuted matrix") {
    const auto H0 = build_spike(2, 0.5);
    const Split s0 = split_permuted(H0, Permutation::identity(2));
    CHECK(max_abs(s0.lower - mat2(0.0, 0.0, 0.5, 0.0)) == 0.0);
    CHECK(s0.diag == Vec::Ones(2));

    const StructuredHessian H(0.5, 0.2, vec({0.0, 0.5, 1.0}));
    const std::size_t one_based[] = {3, 1, 2};
    const Permutation P = Permutation::from_one_based(one_based);
    const Split s = split_permuted(H, P);
    CHECK(max_abs(s.diag - vec({1.2, 1.0, 1.1})) < 1e-15);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
      const auto Hr = build_perturbed_identity(7, 0.3, 0.2, SeededUniformRescaled{static_cast<std::uint64_t>(trial)});
      const Permutation Q = Permutation::random(7, rng);
      const Split sq = split_permuted(Hr, Q);
      const Mat rebuilt = sq.lower + Mat(sq.diag.asDiagonal()) + sq.lower.transpose();
      CHECK(max_abs(rebuilt - Q.matrix().transpose() * Hr.dense() * Q.matrix()) <= 1e-12);
    }
  }

  TEST_CASE("epoch matrix") {
    const Mat C = epoch_matrix(build_spike(2, 0.5), Permutation::identity(2));
    CHECK(max_abs(C - mat2(0.0, -0.5, 0.0, 0.25)) < 1e-15);

    const auto H = build_perturbed_identity(4, 0.2, 0.3, Linspace{});
    std::vector<std::size_t> pi = {0, 1, 2, 3};
    do {
      const Permutation P(pi);
      const Mat CP = epoch_matrix(H, P);
      CHECK(CP.col(0).isZero());
      CHECK(max_abs(CP - dense_epoch(H, P)) < 1e-13);
      const Mat G = permuted_epoch_matrix(H, P);
      CHECK(max_abs(G - P.matrix() * CP * P.matrix().transpose()) < 1e-14);
    } while (std::next_permutation(pi.begin(), pi.end()));
  }

  TEST_CASE("closed-form lower inverse") {
    Mat expected(3, 3);
    expected << -1, 0, 0, 0.5, -1, 0, 0.25, 0.5, -1;
    CHECK(max_abs(lbar(3, 0.5) - expected) < 1e-15);

    CHECK(max_abs(lbar(2, 1e-12) - mat2(-1.0, 0.0, 1.0, -1.0)) < 1e-10);

    for (double delta : {0.01, 0.3, 0.9}) {
      const std::size_t n = 6;
      const Mat E = strict_lower_ones(n);
      const Mat oracle = -(Mat::Identity(6, 6) + (1.0 - delta) * E).inverse();
      CHECK(max_abs(lbar(n, delta) - oracle) < 1e-13);
    }
  }

  TEST_CASE("structural helpers") {
    const Mat E = strict_lower_ones(3);
    CHECK(E.sum() == 3.0);
    CHECK(E(2, 0) == 1.0);
    CHECK(E(0, 2) == 0.0);
    const Mat F = shift_matrix(3);
    CHECK(F(0, 1) == 1.0);
    CHECK(F(1, 2) == 1.0);
    CHECK(F.sum() == 2.0);
  }

  TEST_CASE("elementwise sandwich") {
    CHECK(sandwich_check(build_perturbed_identity(2, 0.5, 0.1, ExplicitWeights{vec({0.0, 1.0})})));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CHECK(sandwich_check(build_perturbed_identity(50, 0.02, 0.05, SeededUniformRescaled{seed})));
    }
    // Upper diagonal bound is 1 + eps; d_i = 2 breaks it.
    const auto H = build_perturbed_identity(3, 0.1, 0.2, Linspace{});
    Mat A = H.dense();
    A(1, 1) = 1.0 + 0.2 * 2.0;
    CHECK_FALSE(sandwich_check(A, 0.1, 0.2));
  }

  TEST_CASE("objective value") {
    const auto H = build_spike(2, 0.5);
    CHECK(quad_value(H, Vec::Zero(2)) == 0.0);
    CHECK(quad_value(H, Vec::Ones(2)) == doctest::Approx(1.5));

    std::mt19937_64 rng(4);
    const auto Hp = build_perturbed_identity(20, 0.05, 0.1, SeededUniformRescaled{2});
    const Vec x = test::normal_vec(20, rng);
    CHECK(quad_value(Hp, x) == doctest::Approx(0.5 * x.dot(Hp.dense() * x)).epsilon(1e-13));
    CHECK_THROWS_AS(quad_value(Hp, Vec::Zero(3)), InvalidParameter);
  }

  TEST_CASE("dense guard and descriptions") {
    CHECK_THROWS_AS(build_perturbed_identity(kMaxDenseDimension + 1, 0.1, 0.1, Linspace{}).dense(), InvalidParameter);
    CHECK(describe(DiagSpec{Linspace{}}) == "linspace");
    CHECK(describe(DiagSpec{SeededUniformRescaled{7}}) == "uniform:7");
    CHECK(describe(EigvecSpec{SeededUniformInBand{3}}) == "band:3");
  }
}
