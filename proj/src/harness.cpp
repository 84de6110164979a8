#include "permcd/harness.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "permcd/errors.hpp"
#include "permcd/output.hpp"
#include "permcd/parallel.hpp"
#include "permcd/recurrence.hpp"

namespace permcd {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Ordering kTableStrategies[] = {Ordering::Cyclic, Ordering::UniformRandom, Ordering::RandomPermutation};

std::string describe_matrix_spec(const ExperimentConfig& cfg) {
  return cfg.family == MatrixFamily::SpikedEigvec ? describe(cfg.u_spec) : describe(cfg.d_spec);
}

// NaN-aware JSON number.
ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json provenance(const ExperimentConfig& cfg) {
  ordered_json p;
  p["family"] = std::string(to_string(cfg.family));
  p["n"] = cfg.n;
  p["eps_rule"] = std::string(to_string(cfg.eps_rule));
  p["d_spec"] = describe_matrix_spec(cfg);
  p["x0_spec"] = describe(cfg.x0);
  p["seed_base"] = cfg.seed_base;
  p["seeds"] = cfg.seeds;
  p["epochs"] = cfg.epochs;
  p["window"] = cfg.window;
  p["rho_bar"] = cfg.rho_bar;
  p["build_id"] = std::string(build_id());
  return p;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += sep;
    out += items[k];
  }
  return out;
}

}  // namespace

StructuredHessian hessian_for(const ExperimentConfig& cfg, double delta) {
  const double eps = cfg.eps_for(delta);
  switch (cfg.family) {
    case MatrixFamily::Spike:
      return build_spike(cfg.n, delta);
    case MatrixFamily::SpikedEigvec:
      return build_spiked_eigvec(cfg.n, delta, eps, cfg.u_spec).companion;
    case MatrixFamily::PerturbedIdentity:
      break;
  }
  return build_perturbed_identity(cfg.n, delta, eps, cfg.d_spec);
}

// ---------------------------------------------------------------------------

std::vector<FigureSeries> run_figure(const ExperimentConfig& cfg) {
  validate(cfg);
  RunOptions opts;
  opts.stop_below = cfg.stop_below;
  std::vector<FigureSeries> out;

  for (double delta : cfg.deltas) {
    const double eps = cfg.eps_for(delta);
    auto base = [&](std::string family, Ordering s, std::uint64_t seed) {
      FigureSeries fs;
      fs.family = std::move(family);
      fs.delta = delta;
      fs.eps = eps;
      fs.strategy = s;
      fs.seed = seed;
      fs.d_spec = describe_matrix_spec(cfg);
      fs.x0_spec = describe(cfg.x0);
      return fs;
    };

    if (cfg.family == MatrixFamily::SpikedEigvec) {
      const SpikedEigvecPair pair = build_spiked_eigvec(cfg.n, delta, eps, cfg.u_spec);
      const CoordinateModel spiked = CoordinateModel::from(pair.spiked);
      for (Ordering s : cfg.strategies) {
        for (std::uint64_t seed : cfg.seed_list()) {
          const Vec x0 = make_x0(cfg.n, cfg.x0, seed);
          FigureSeries fs = base("spiked-eigvec", s, seed);
          fs.trace = run_epochs(spiked, x0, s, cfg.epochs, seed, opts);
          fs.trace.params.delta = delta;
          fs.trace.params.eps = eps;
          out.push_back(std::move(fs));
          if (cfg.companion) {
            // f_B(x) = f_A(U x), so the companion starts from U x0.
            FigureSeries cs = base("companion", s, seed);
            cs.trace = run_epochs(pair.companion, pair.spiked.u.cwiseProduct(x0), s, cfg.epochs, seed, opts);
            out.push_back(std::move(cs));
          }
        }
      }
      continue;
    }

    const StructuredHessian H = hessian_for(cfg, delta);
    for (Ordering s : cfg.strategies) {
      for (std::uint64_t seed : cfg.seed_list()) {
        FigureSeries fs = base(std::string(to_string(cfg.family)), s, seed);
        fs.trace = run_epochs(H, make_x0(cfg.n, cfg.x0, seed), s, cfg.epochs, seed, opts);
        out.push_back(std::move(fs));
      }
    }
  }
  for (auto& fs : out) {
    fs.trace.params.d_spec = fs.d_spec;
    fs.trace.params.x0_spec = fs.x0_spec;
  }
  return out;
}

void write_figure_csv(std::ostream& os, const std::vector<FigureSeries>& series) {
  CsvWriter csv(os, {"epoch", "strategy", "seed", "fval", "fval_over_f0", "family", "n", "delta", "eps",
                     "d_spec", "x0_spec", "truncated", "build_id"});
  for (const auto& fs : series) {
    const auto& f = fs.trace.fvals;
    const double f0 = f.empty() ? kNaN : f.front();
    for (std::size_t e = 0; e < f.size(); ++e) {
      csv.row({std::to_string(e), std::string(to_string(fs.strategy)), std::to_string(fs.seed),
               format_double(f[e]), format_double(f0 > 0.0 ? f[e] / f0 : kNaN), fs.family,
               std::to_string(fs.trace.params.n), format_double(fs.delta), format_double(fs.eps), fs.d_spec,
               fs.x0_spec, fs.trace.truncated ? "true" : "false", std::string(build_id())});
    }
  }
}

void write_figure_json(std::ostream& os, const std::vector<FigureSeries>& series) {
  ordered_json out = ordered_json::array();
  for (const auto& fs : series) {
    ordered_json s;
    s["family"] = fs.family;
    s["strategy"] = std::string(to_string(fs.strategy));
    s["seed"] = fs.seed;
    s["n"] = fs.trace.params.n;
    s["delta"] = fs.delta;
    s["eps"] = fs.eps;
    s["d_spec"] = fs.d_spec;
    s["x0_spec"] = fs.x0_spec;
    s["truncated"] = fs.trace.truncated;
    s["build_id"] = std::string(build_id());
    ordered_json f = ordered_json::array();
    for (double v : fs.trace.fvals) f.push_back(num(v));
    s["fvals"] = std::move(f);
    out.push_back(std::move(s));
  }
  os << out.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<TableRow> run_table(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::size_t D = cfg.deltas.size();
  const std::vector<std::uint64_t> seeds = cfg.seed_list();
  const std::size_t S = seeds.size();
  constexpr std::size_t K = std::size(kTableStrategies);

  std::vector<StructuredHessian> hessians;
  hessians.reserve(D);
  for (double delta : cfg.deltas) hessians.push_back(hessian_for(cfg, delta));

  RunOptions opts;
  opts.stop_below = cfg.stop_below;

  // Cells: one per (delta, seed, strategy), then one spectral solve per delta.
  const std::size_t runs = D * S * K;
  std::vector<double> log_rates(runs, kNaN);
  std::vector<SpectralRate> spectral(D);
  parallel_for(runs + D, cfg.threads, [&](std::size_t cell) {
    if (cell >= runs) {
      const std::size_t di = cell - runs;
      spectral[di] = ccd_spectral_rate(hessians[di]);
      return;
    }
    const std::size_t di = cell / (S * K);
    const std::size_t si = (cell / K) % S;
    const Ordering strategy = kTableStrategies[cell % K];
    const StructuredHessian& H = hessians[di];
    const EpochTrace trace = run_epochs(H, make_x0(cfg.n, cfg.x0, seeds[si]), strategy, cfg.epochs, seeds[si], opts);
    try {
      log_rates[cell] = std::log(observed_rate(trace, cfg.window));
    } catch (const EstimationError&) {
      log_rates[cell] = kNaN;
    }
  });

  std::vector<TableRow> rows;
  rows.reserve(D);
  for (std::size_t di = 0; di < D; ++di) {
    TableRow row;
    row.delta = cfg.deltas[di];
    row.eps = hessians[di].eps();
    row.seeds = S;
    double observed[K];
    for (std::size_t k = 0; k < K; ++k) {
      double sum = 0.0;
      bool ok = true;
      for (std::size_t si = 0; si < S; ++si) {
        const double lr = log_rates[(di * S + si) * K + k];
        if (std::isnan(lr)) ok = false;
        sum += lr;
      }
      observed[k] = ok ? -std::expm1(sum / static_cast<double>(S)) : kNaN;
      if (!ok) row.unestimable.emplace_back(to_string(kTableStrategies[k]));
    }
    row.ccd_observed = observed[0];
    row.rcd_observed = observed[1];
    row.rpcd_observed = observed[2];
    row.ccd_spectral = 1.0 - spectral[di].rate;
    row.warning = spectral[di].warning;
    row.rcd_predicted = 1.0 - rcd_predicted_rate(cfg.n, row.delta, row.eps);
    row.benchmark_2delta = 2.0 * row.delta;
    row.regime_ok = regime_check({cfg.n, row.delta, row.eps, cfg.rho_bar}).ok;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_table_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<TableRow>& rows) {
  CsvWriter csv(os, {"delta", "eps", "ccd_observed", "ccd_spectral", "rcd_observed", "rcd_predicted",
                     "rpcd_observed", "benchmark_2delta", "regime_ok", "unestimable", "seeds", "seed_base",
                     "epochs", "n", "family", "d_spec", "x0_spec", "build_id", "warning"});
  for (const auto& r : rows) {
    csv.row({format_double(r.delta), format_double(r.eps), format_double(r.ccd_observed),
             format_double(r.ccd_spectral), format_double(r.rcd_observed), format_double(r.rcd_predicted),
             format_double(r.rpcd_observed), format_double(r.benchmark_2delta), r.regime_ok ? "true" : "false",
             join(r.unestimable, ';'), std::to_string(r.seeds), std::to_string(cfg.seed_base),
             std::to_string(cfg.epochs), std::to_string(cfg.n), std::string(to_string(cfg.family)),
             describe_matrix_spec(cfg), describe(cfg.x0), std::string(build_id()), r.warning});
  }
}

void write_table_json(std::ostream& os, const ExperimentConfig& cfg, const std::vector<TableRow>& rows) {
  ordered_json out;
  out["provenance"] = provenance(cfg);
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["delta"] = r.delta;
    j["eps"] = r.eps;
    j["ccd_observed"] = num(r.ccd_observed);
    j["ccd_spectral"] = num(r.ccd_spectral);
    j["rcd_observed"] = num(r.rcd_observed);
    j["rcd_predicted"] = num(r.rcd_predicted);
    j["rpcd_observed"] = num(r.rpcd_observed);
    j["benchmark_2delta"] = r.benchmark_2delta;
    j["regime_ok"] = r.regime_ok;
    j["unestimable"] = r.unestimable;
    j["seeds"] = r.seeds;
    if (!r.warning.empty()) j["warning"] = r.warning;
    arr.push_back(std::move(j));
  }
  out["rows"] = std::move(arr);
  os << out.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<RatesRow> run_rates(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<RatesRow> rows(cfg.deltas.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t k) {
    const double delta = cfg.deltas[k];
    const StructuredHessian H = hessian_for(cfg, delta);
    RatesRow& r = rows[k];
    r.delta = delta;
    r.eps = H.eps();
    r.d_av = H.d_av();
    r.rcd_predicted = 1.0 - rcd_predicted_rate(cfg.n, delta, r.eps);
    r.rcd_naive = 1.0 - rcd_naive_rate(cfg.n, delta, r.eps);
    r.rcd_nonuniform = 1.0 - rcd_nonuniform_rate(cfg.n, delta, r.eps, r.d_av);
    r.ccd_suny = 1.0 - ccd_bound_suny(cfg.n, delta, r.eps);
    if (cfg.n <= kMaxDenseDimension) {
      const SpectralRate s = ccd_spectral_rate(H);
      r.ccd_spectral = 1.0 - s.rate;
      r.warning = s.warning;
    } else {
      r.ccd_spectral = kNaN;
      r.warning = "n above dense limit; spectral rate skipped";
    }
    r.regime_ok = regime_check({cfg.n, delta, r.eps, cfg.rho_bar}).ok;
  });
  return rows;
}

void write_rates_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RatesRow>& rows) {
  CsvWriter csv(os, {"delta", "eps", "d_av", "rcd_predicted", "rcd_naive", "rcd_nonuniform", "ccd_suny",
                     "ccd_spectral", "regime_ok", "n", "family", "d_spec", "build_id", "warning"});
  for (const auto& r : rows) {
    csv.row({format_double(r.delta), format_double(r.eps), format_double(r.d_av), format_double(r.rcd_predicted),
             format_double(r.rcd_naive), format_double(r.rcd_nonuniform), format_double(r.ccd_suny),
             format_double(r.ccd_spectral), r.regime_ok ? "true" : "false", std::to_string(cfg.n),
             std::string(to_string(cfg.family)), describe_matrix_spec(cfg), std::string(build_id()), r.warning});
  }
}

void write_rates_json(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RatesRow>& rows) {
  ordered_json out;
  out["provenance"] = provenance(cfg);
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["delta"] = r.delta;
    j["eps"] = r.eps;
    j["d_av"] = r.d_av;
    j["rcd_predicted"] = r.rcd_predicted;
    j["rcd_naive"] = r.rcd_naive;
    j["rcd_nonuniform"] = r.rcd_nonuniform;
    j["ccd_suny"] = r.ccd_suny;
    j["ccd_spectral"] = num(r.ccd_spectral);
    j["regime_ok"] = r.regime_ok;
    if (!r.warning.empty()) j["warning"] = r.warning;
    arr.push_back(std::move(j));
  }
  out["rows"] = std::move(arr);
  os << out.dump(2) << '\n';
}

}  // namespace permcd
