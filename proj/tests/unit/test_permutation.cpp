#include "unit/helpers.hpp"

#include <algorithm>
#include <numeric>

#include "permcd/errors.hpp"
#include "permcd/permutation.hpp"

using namespace permcd;
using permcd::test::max_abs;
using permcd::test::vec;

TEST_SUITE("permutation") {
  TEST_CASE("matrix convention") {
    const Permutation p({2, 0, 1});
    const Mat P = p.matrix();
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(P(static_cast<Eigen::Index>(p[k]), static_cast<Eigen::Index>(k)) == 1.0);
    }
    const Vec u = vec({10.0, 20.0, 30.0});
    CHECK(p.gather(u) == P.transpose() * u);
    CHECK(p.scatter(u) == P * u);
    CHECK(p.gather(p.scatter(u)) == u);
  }

  TEST_CASE("inverse") {
    const Permutation p({3, 0, 2, 1});
    const Permutation q = p.inverse();
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(q[p[k]] == k);
      CHECK(p.inverse_at(p[k]) == k);
    }
    CHECK(max_abs(q.matrix() - p.matrix().transpose()) == 0.0);
  }

  TEST_CASE("one-based construction and validation") {
    const std::size_t pi[] = {3, 1, 2};
    CHECK(Permutation::from_one_based(pi).indices() == std::vector<std::size_t>{2, 0, 1});
    CHECK_THROWS_AS(Permutation({0, 0, 1}), InvalidParameter);
    CHECK_THROWS_AS(Permutation({0, 3, 1}), InvalidParameter);
    const std::size_t zero[] = {0, 1};
    CHECK_THROWS_AS(Permutation::from_one_based(zero), InvalidParameter);
  }

  TEST_CASE("lexicographic rank and factorial") {
    CHECK(factorial(0) == 1);
    CHECK(factorial(8) == 40320);
    CHECK_THROWS_AS(factorial(25), InvalidParameter);

    std::vector<std::size_t> pi(4);
    std::iota(pi.begin(), pi.end(), 0);
    std::size_t expected = 0;
    do {
      CHECK(lexicographic_rank(Permutation(pi)) == expected++);
    } while (std::next_permutation(pi.begin(), pi.end()));
    CHECK(expected == 24);
  }

  TEST_CASE("random draws are uniform (chi-square, 23 dof)") {
    std::mt19937_64 rng(2024);
    std::vector<double> counts(24, 0.0);
    constexpr int draws = 48000;
    for (int k = 0; k < draws; ++k) counts[lexicographic_rank(Permutation::random(4, rng))] += 1.0;
    const double expected = draws / 24.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 49.7282);  // 0.999 quantile
  }

  TEST_CASE("random draws are reproducible per seed") {
    std::mt19937_64 a(5), b(5);
    for (int k = 0; k < 10; ++k) CHECK(Permutation::random(9, a) == Permutation::random(9, b));
  }
}
