#pragma once

// Verification suites behind `permcd verify`. Each check carries the measured
// value and the limit it was held to, so reports stay machine readable.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace permcd {

enum class Suite { Identities, Lemmas, Recurrence, FirstIter, Scaling, All };

std::string_view to_string(Suite s);
std::optional<Suite> parse_suite(std::string_view name);

struct VerifyCheck {
  std::string suite;
  std::string name;
  std::string params;  // e.g. "n=5 delta=0.1 eps=0.1"
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
  std::size_t failures() const;
};

struct VerifyOptions {
  unsigned threads = 0;
};

/// Exact enumeration identities at n = 3..6; value is max_abs_error.
VerifyReport verify_identities(const VerifyOptions& opts = {});

/// Remainder size and halving ratio of the leading-term expansions at n = 6,
/// delta = eps = 0.05. One extra check holds the median ratio across lemmas.
VerifyReport verify_lemmas(const VerifyOptions& opts = {});

/// Bounding-recurrence suite on the n = 100 grid, plus the exact expected
/// curve against 2e4 simulated RPCD traces at n = 5.
VerifyReport verify_recurrence(const VerifyOptions& opts = {});

/// Single-step bound on 1000 random (x0, i) draws and the i-averaged bound.
VerifyReport verify_first_iter(const VerifyOptions& opts = {});

/// Diagonal-scaling twin runs on 20 dense instances and 20 spiked-eigenvector
/// instances against their companions.
VerifyReport verify_scaling(const VerifyOptions& opts = {});

VerifyReport run_verify(Suite suite, const VerifyOptions& opts = {});

void write_verify_json(std::ostream& os, Suite suite, const VerifyReport& report);
void write_verify_csv(std::ostream& os, const VerifyReport& report);

// Parameters shared with the acceptance binary.
inline constexpr std::size_t kRecurrenceN = 100;
inline constexpr std::size_t kRecurrenceT = 500;
inline constexpr double kTailLow = 1.3;   // deficit / delta
inline constexpr double kTailHigh = 2.2;
inline constexpr double kTwinTolerance = 1e-9;

/// Horizon for the tail ratio: long enough for the transient to die out.
std::size_t tail_horizon(double delta);

}  // namespace permcd
