#pragma once

// Experiment runners behind the CLI: per-epoch figure data, rate tables and
// formula sheets. Every emitted row carries its provenance.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "permcd/cd_engine.hpp"
#include "permcd/config.hpp"
#include "permcd/rates.hpp"

namespace permcd {

// ---------------------------------------------------------------------------
// Figure data
// ---------------------------------------------------------------------------

struct FigureSeries {
  std::string family;  // "perturbed", "spike", "spiked-eigvec" or "companion"
  double delta = 0.0;
  double eps = 0.0;
  Ordering strategy = Ordering::Cyclic;
  std::uint64_t seed = 0;
  std::string d_spec;
  std::string x0_spec;
  EpochTrace trace;
};

/// One series per (delta, strategy, seed), plus a companion series for each
/// when the spiked-eigenvector family runs with `companion` set. A seed fixes
/// both x0 and the coordinate order; strategies share x0 for a given seed.
std::vector<FigureSeries> run_figure(const ExperimentConfig& cfg);

void write_figure_csv(std::ostream& os, const std::vector<FigureSeries>& series);
void write_figure_json(std::ostream& os, const std::vector<FigureSeries>& series);

// ---------------------------------------------------------------------------
// Rate table
// ---------------------------------------------------------------------------

/// All rate columns are per-epoch deficits 1 - rho. NaN marks a value that
/// could not be estimated.
struct TableRow {
  double delta = 0.0;
  double eps = 0.0;
  double ccd_observed = 0.0;
  double ccd_spectral = 0.0;
  double rcd_observed = 0.0;
  double rcd_predicted = 0.0;
  double rpcd_observed = 0.0;
  double benchmark_2delta = 0.0;
  bool regime_ok = false;
  std::size_t seeds = 0;
  std::vector<std::string> unestimable;  // strategies lacking a full tail window
  std::string warning;
};

/// Runs CCD, RCD and RPCD for every (delta, seed) cell concurrently; rows come
/// back in grid order. Observed rates are geometric means over seeds.
std::vector<TableRow> run_table(const ExperimentConfig& cfg);

void write_table_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<TableRow>& rows);
void write_table_json(std::ostream& os, const ExperimentConfig& cfg, const std::vector<TableRow>& rows);

// ---------------------------------------------------------------------------
// Formula sheet
// ---------------------------------------------------------------------------

struct RatesRow {
  double delta = 0.0;
  double eps = 0.0;
  double d_av = 0.0;
  double rcd_predicted = 0.0;  // deficits, as in TableRow
  double rcd_naive = 0.0;
  double rcd_nonuniform = 0.0;
  double ccd_suny = 0.0;
  double ccd_spectral = 0.0;
  bool regime_ok = false;
  std::string warning;
};

std::vector<RatesRow> run_rates(const ExperimentConfig& cfg);

void write_rates_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RatesRow>& rows);
void write_rates_json(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RatesRow>& rows);

/// Structured Hessian for one grid point (perturbed or spike family).
StructuredHessian hessian_for(const ExperimentConfig& cfg, double delta);

}  // namespace permcd
