#include "permcd/cd_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "permcd/errors.hpp"

namespace permcd {

namespace {

constexpr std::uint32_t kOrderStream = 0x6f726472u;
constexpr std::uint32_t kX0Stream = 0x78307830u;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

void check_index(std::size_t i, std::size_t n) {
  if (i >= n) throw InvalidParameter("coordinate index " + std::to_string(i) + " out of range");
}

// Picks coordinates according to a strategy, one epoch at a time.
class OrderSource {
 public:
  OrderSource(const CoordinateModel& M, Ordering strategy, std::uint64_t seed)
      : n_(M.size()), strategy_(strategy), rng_(stream_rng(seed, kOrderStream)) {
    if (strategy_ == Ordering::DiagonalWeighted) {
      cumulative_.resize(n_);
      double acc = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        acc += M.diagonal(i);
        cumulative_[i] = acc;
      }
    }
  }

  void next_epoch(std::vector<std::size_t>& order) {
    order.resize(n_);
    switch (strategy_) {
      case Ordering::Cyclic:
        std::iota(order.begin(), order.end(), std::size_t{0});
        break;
      case Ordering::RandomPermutation:
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng_);
        break;
      case Ordering::UniformRandom: {
        std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
        for (auto& i : order) i = pick(rng_);
        break;
      }
      case Ordering::DiagonalWeighted: {
        std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
        for (auto& i : order) {
          const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), unif(rng_));
          i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), n_ - 1);
        }
        break;
      }
    }
  }

 private:
  std::size_t n_;
  Ordering strategy_;
  std::mt19937_64 rng_;
  std::vector<double> cumulative_;
};

}  // namespace

std::string_view to_string(Ordering o) {
  switch (o) {
    case Ordering::Cyclic: return "ccd";
    case Ordering::UniformRandom: return "rcd";
    case Ordering::RandomPermutation: return "rpcd";
    case Ordering::DiagonalWeighted: return "weighted";
  }
  return "unknown";
}

std::optional<Ordering> parse_ordering(std::string_view name) {
  if (name == "ccd" || name == "cyclic") return Ordering::Cyclic;
  if (name == "rcd" || name == "uniform") return Ordering::UniformRandom;
  if (name == "rpcd" || name == "permutation") return Ordering::RandomPermutation;
  if (name == "weighted" || name == "diagonal-weighted") return Ordering::DiagonalWeighted;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

CoordinateModel CoordinateModel::from(const StructuredHessian& H) {
  const auto n = static_cast<Eigen::Index>(H.size());
  CoordinateModel M;
  M.a = (H.delta() + H.eps() * H.d().array()).matrix();
  M.c = 1.0 - H.delta();
  M.w = Vec::Ones(n);
  return M;
}

CoordinateModel CoordinateModel::from(const SpikedEigvecMatrix& B) {
  CoordinateModel M;
  M.a = Vec::Constant(B.u.size(), B.delta);
  M.c = 1.0 - B.delta;
  M.w = B.u;
  return M;
}

double CoordinateModel::value(const Vec& x) const {
  if (x.size() != a.size()) throw InvalidParameter("value: length mismatch");
  const double s = w.dot(x);
  return 0.5 * ((a.array() * x.array().square()).sum() + c * s * s);
}

CdState CdState::make(const StructuredHessian& H, Vec x) {
  CdState st;
  st.fval = quad_value(H, x);
  st.coord_sum = x.sum();
  st.x = std::move(x);
  return st;
}

CdState CdState::make(const CoordinateModel& M, Vec x) {
  CdState st;
  st.fval = M.value(x);
  st.coord_sum = M.w.dot(x);
  st.x = std::move(x);
  return st;
}

CdState cd_step(const StructuredHessian& H, CdState state, std::size_t i) {
  check_index(i, H.size());
  const double old = state.x(i);
  const double diag = H.diagonal(i);
  const double next = -(1.0 - H.delta()) * (state.coord_sum - old) / diag;
  const double step = next - old;
  state.x(i) = next;
  state.coord_sum += step;
  state.fval -= 0.5 * diag * step * step;
  return state;
}

void cd_step(const CoordinateModel& M, CdState& state, std::size_t i) {
  const double old = state.x(i);
  const double wi = M.w(i);
  const double diag = M.a(i) + M.c * wi * wi;
  const double next = -M.c * wi * (state.coord_sum - wi * old) / diag;
  const double step = next - old;
  state.x(i) = next;
  state.coord_sum += wi * step;
  state.fval -= 0.5 * diag * step * step;
}

// ---------------------------------------------------------------------------

std::string describe(const X0Spec& spec) {
  if (std::holds_alternative<StdNormalX0>(spec)) return "stdnormal";
  if (std::holds_alternative<OnesX0>(spec)) return "ones";
  return "explicit[" + std::to_string(std::get<ExplicitX0>(spec).values.size()) + "]";
}

Vec make_x0(std::size_t n, const X0Spec& spec, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(n);
  if (std::holds_alternative<OnesX0>(spec)) return Vec::Ones(m);
  if (const auto* e = std::get_if<ExplicitX0>(&spec)) {
    if (e->values.size() != m) throw InvalidParameter("explicit x0 has wrong length");
    return e->values;
  }
  auto rng = stream_rng(seed, kX0Stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x(m);
  for (Eigen::Index i = 0; i < m; ++i) x(i) = normal(rng);
  return x;
}

// ---------------------------------------------------------------------------

EpochTrace run_epochs(const CoordinateModel& M, const Vec& x0, Ordering strategy,
                      std::size_t epochs, std::uint64_t seed, const RunOptions& opts) {
  const std::size_t n = M.size();
  if (n == 0) throw InvalidParameter("run_epochs: empty problem");
  if (static_cast<std::size_t>(x0.size()) != n) throw InvalidParameter("run_epochs: x0 length mismatch");

  EpochTrace trace;
  trace.seed = seed;
  trace.strategy = strategy;
  trace.params.n = n;
  trace.fvals.reserve(epochs + 1);

  CdState st = CdState::make(M, x0);
  trace.fvals.push_back(st.fval);

  OrderSource source(M, strategy, seed);
  std::vector<std::size_t> order;
  for (std::size_t ep = 0; ep < epochs; ++ep) {
    if (st.fval < kUnderflowThreshold) {
      trace.truncated = true;
      break;
    }
    if (opts.stop_below > 0.0 && st.fval < opts.stop_below) break;

    source.next_epoch(order);
    for (std::size_t i : order) cd_step(M, st, i);

    // Refresh cached quantities to stop drift.
    st.coord_sum = M.w.dot(st.x);
    st.fval = M.value(st.x);
    trace.fvals.push_back(st.fval);
    if (opts.record_orders) trace.orders.push_back(order);
  }
  if (st.fval < kUnderflowThreshold) trace.truncated = true;
  trace.final_x = std::move(st.x);
  return trace;
}

EpochTrace run_epochs(const StructuredHessian& H, const Vec& x0, Ordering strategy,
                      std::size_t epochs, std::uint64_t seed, const RunOptions& opts) {
  EpochTrace t = run_epochs(CoordinateModel::from(H), x0, strategy, epochs, seed, opts);
  t.params.delta = H.delta();
  t.params.eps = H.eps();
  return t;
}

Vec epoch_via_matrix(const StructuredHessian& H, const Permutation& P, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != H.size()) throw InvalidParameter("epoch_via_matrix: length mismatch");
  return permuted_epoch_matrix(H, P) * x;
}

// ---------------------------------------------------------------------------

void dense_cd_step(const Mat& A, Vec& x, std::size_t i) {
  const auto k = static_cast<Eigen::Index>(i);
  if (k >= A.rows()) throw InvalidParameter("dense_cd_step: index out of range");
  const double g = A.row(k).dot(x);
  x(k) -= g / A(k, k);
}

TwinRunResult scaled_twin_run(const Mat& A, const Vec& f_diag, const Vec& x0,
                              const std::vector<std::size_t>& index_seq) {
  const auto n = A.rows();
  if (A.cols() != n || f_diag.size() != n || x0.size() != n) {
    throw InvalidParameter("scaled_twin_run: dimension mismatch");
  }
  if ((f_diag.array() == 0.0).any()) throw InvalidParameter("scaled_twin_run: zero scaling entry");

  const Vec inv = f_diag.cwiseInverse();
  const Mat A_scaled = inv.asDiagonal() * A * inv.asDiagonal();

  Vec x = x0;
  Vec y = f_diag.cwiseProduct(x0);
  TwinRunResult r;
  auto record = [&] {
    const double f = 0.5 * x.dot(A * x);
    const double g = 0.5 * y.dot(A_scaled * y);
    r.fvals.push_back(f);
    r.fvals_scaled.push_back(g);
    r.max_gap = std::max(r.max_gap, std::abs(f - g));
    r.max_iterate_gap =
        std::max(r.max_iterate_gap, (y - f_diag.cwiseProduct(x)).cwiseAbs().maxCoeff());
  };
  record();
  for (std::size_t i : index_seq) {
    dense_cd_step(A, x, i);
    dense_cd_step(A_scaled, y, i);
    record();
  }
  return r;
}

}  // namespace permcd
