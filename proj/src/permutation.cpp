#include "permcd/permutation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "permcd/errors.hpp"

namespace permcd {

Permutation::Permutation(std::vector<std::size_t> pi) : pi_(std::move(pi)), inv_(pi_.size()) {
  const std::size_t n = pi_.size();
  std::vector<bool> seen(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t v = pi_[k];
    if (v >= n || seen[v]) {
      throw InvalidParameter("permutation: entry " + std::to_string(v) + " at position " +
                             std::to_string(k) + " is out of range or repeated");
    }
    seen[v] = true;
    inv_[v] = k;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> pi(n);
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  return Permutation(std::move(pi));
}

Permutation Permutation::from_one_based(std::span<const std::size_t> pi) {
  std::vector<std::size_t> zero_based(pi.size());
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] == 0) throw InvalidParameter("permutation: 1-based entry 0");
    zero_based[k] = pi[k] - 1;
  }
  return Permutation(std::move(zero_based));
}

Permutation Permutation::random(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> pi(n);
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  std::shuffle(pi.begin(), pi.end(), rng);
  return Permutation(std::move(pi));
}

Permutation Permutation::inverse() const { return Permutation(inv_); }

Eigen::VectorXd Permutation::gather(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) out(k) = u(pi_[k]);
  return out;
}

Eigen::VectorXd Permutation::scatter(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) out(pi_[k]) = v(k);
  return out;
}

Eigen::MatrixXd Permutation::matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < size(); ++k) P(pi_[k], k) = 1.0;
  return P;
}

std::size_t factorial(std::size_t n) {
  std::size_t out = 1;
  for (std::size_t k = 2; k <= n; ++k) {
    if (out > std::numeric_limits<std::size_t>::max() / k) {
      throw InvalidParameter("factorial overflow at n=" + std::to_string(n));
    }
    out *= k;
  }
  return out;
}

std::size_t lexicographic_rank(const Permutation& p) {
  const std::size_t n = p.size();
  std::size_t rank = 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t smaller_later = 0;
    for (std::size_t j = k + 1; j < n; ++j) {
      if (p[j] < p[k]) ++smaller_later;
    }
    rank += smaller_later * factorial(n - 1 - k);
  }
  return rank;
}

}  // namespace permcd
