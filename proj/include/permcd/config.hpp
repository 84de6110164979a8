#pragma once

// Experiment configuration.
//
// File grammar (one setting per line):
//
//   # comment
//   key = value
//
// Keys match the long CLI flags without the leading dashes ("eps-rule" and
// "eps_rule" are the same key). List values are comma separated. Later
// settings override earlier ones; CLI flags are applied after the file.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "permcd/cd_engine.hpp"
#include "permcd/matrices.hpp"

namespace permcd {

enum class MatrixFamily { PerturbedIdentity, Spike, SpikedEigvec };
enum class EpsRule { Equal, SqrtDeltaOver10, Fixed };
enum class OutputFormat { Csv, Json };
enum class Command { Figure, Table, Verify, Rates };

std::string_view to_string(MatrixFamily f);
std::string_view to_string(EpsRule r);

struct ExperimentConfig {
  MatrixFamily family = MatrixFamily::PerturbedIdentity;
  std::size_t n = 100;
  std::vector<double> deltas = {0.01};
  EpsRule eps_rule = EpsRule::Equal;
  double eps = 0.0;  // used by EpsRule::Fixed
  DiagSpec d_spec = Linspace{};
  EigvecSpec u_spec = SeededUniformInBand{0};
  bool companion = false;
  std::vector<Ordering> strategies = {Ordering::Cyclic, Ordering::RandomPermutation,
                                      Ordering::UniformRandom};
  std::size_t epochs = 100;
  std::size_t seeds = 1;
  std::uint64_t seed_base = 0;
  X0Spec x0 = StdNormalX0{};
  std::size_t window = 10;
  double stop_below = 0.0;
  double rho_bar = 0.5;
  std::string suite = "all";
  unsigned threads = 0;
  std::string out;  // empty: stdout
  OutputFormat format = OutputFormat::Csv;

  std::vector<std::uint64_t> seed_list() const;
  double eps_for(double delta) const;
};

/// Per-command defaults (table: five-point delta grid, 2000 epochs, 5 seeds).
ExperimentConfig default_config(Command cmd);

using Setting = std::pair<std::string, std::string>;

/// Parses the flat key = value text. Throws ConfigError naming the line.
std::vector<Setting> parse_config_text(std::string_view text);
std::vector<Setting> load_config_file(const std::string& path);

/// Applies one setting; throws ConfigError(field, ...) on bad keys or values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Range checks that need several fields at once (e.g. delta < n/(n-1)).
void validate(const ExperimentConfig& cfg);

DiagSpec parse_d_spec(const std::string& text);
EigvecSpec parse_u_spec(const std::string& text);
X0Spec parse_x0_spec(const std::string& text);

}  // namespace permcd
