#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace permcd {

/// A permutation pi of {0..n-1} with its inverse cached.
///
/// Convention: the associated permutation matrix P satisfies P e_k = e_{pi(k)},
/// so (P^T u)_k = u_{pi(k)}. Running Gauss-Seidel on P^T A P in natural order
/// visits the original coordinates in the order pi(0), pi(1), ...
class Permutation {
 public:
  Permutation() = default;

  /// Throws InvalidParameter unless `pi` is a bijection of {0..n-1}.
  explicit Permutation(std::vector<std::size_t> pi);

  static Permutation identity(std::size_t n);
  /// Accepts the 1-based notation used in hand-worked examples.
  static Permutation from_one_based(std::span<const std::size_t> pi);
  /// Uniform draw (Fisher-Yates).
  static Permutation random(std::size_t n, std::mt19937_64& rng);

  std::size_t size() const noexcept { return pi_.size(); }
  std::size_t operator[](std::size_t k) const { return pi_[k]; }
  std::size_t inverse_at(std::size_t i) const { return inv_[i]; }
  const std::vector<std::size_t>& indices() const noexcept { return pi_; }

  Permutation inverse() const;

  /// (P^T u)_k = u_{pi(k)}
  Eigen::VectorXd gather(const Eigen::VectorXd& u) const;
  /// (P v)_{pi(k)} = v_k
  Eigen::VectorXd scatter(const Eigen::VectorXd& v) const;

  /// Dense P. Verification code only.
  Eigen::MatrixXd matrix() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> pi_;
  std::vector<std::size_t> inv_;
};

/// Lexicographic rank of a permutation in [0, n!). Used for histogramming.
std::size_t lexicographic_rank(const Permutation& p);

/// n! as a size_t; throws InvalidParameter on overflow.
std::size_t factorial(std::size_t n);

}  // namespace permcd
