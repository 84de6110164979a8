#include "permcd/cli.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "permcd/config.hpp"
#include "permcd/errors.hpp"
#include "permcd/harness.hpp"
#include "permcd/verify.hpp"

namespace permcd {

namespace {

// Flags mirror the config-file keys one to one.
const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"family", "perturbed | spike | spiked-eigvec"},
    {"n", "dimension"},
    {"delta", "comma-separated delta grid"},
    {"eps", "fixed eps (implies --eps-rule fixed)"},
    {"eps-rule", "equal | sqrt-delta-over-10 | fixed"},
    {"d-spec", "linspace | uniform:<seed> | explicit:<v1,...>"},
    {"u-spec", "band:<seed> | explicit:<v1,...>"},
    {"companion", "also run the scaled companion (spiked-eigvec figures)"},
    {"strategy", "comma-separated: ccd, rcd, rpcd, weighted"},
    {"epochs", "epochs per run"},
    {"seeds", "number of seeds"},
    {"seed-base", "first seed"},
    {"x0", "stdnormal | ones | explicit:<v1,...>"},
    {"window", "tail window for observed rates"},
    {"stop-below", "stop a run once f drops below this"},
    {"rho-bar", "remainder-constant bound for the regime flag"},
    {"suite", "identities | lemmas | recurrence | firstiter | scaling | all"},
    {"threads", "worker threads (0: hardware concurrency)"},
    {"out", "output path (default stdout)"},
    {"format", "csv | json"},
};

struct Subcommand {
  Command cmd;
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
};

void add_flags(Subcommand& sc) {
  sc.app->add_option("--config", sc.config_path, "key = value configuration file");
  for (const auto& [name, help] : kFlags) {
    sc.app->add_option("--" + name, sc.values[name], help);
  }
}

ExperimentConfig build_config(const Subcommand& sc) {
  ExperimentConfig cfg = default_config(sc.cmd);
  if (!sc.config_path.empty()) {
    for (const auto& [key, value] : load_config_file(sc.config_path)) apply_setting(cfg, key, value);
  }
  // Command-line values win over the file. Fixed flag order keeps eps after eps-rule.
  for (const auto& [name, help] : kFlags) {
    if (sc.app->count("--" + name) > 0) apply_setting(cfg, name, sc.values.at(name));
  }
  if (sc.app->count("--eps") > 0 && sc.app->count("--eps-rule") > 0 && sc.values.at("eps-rule") != "fixed") {
    throw ConfigError("eps", "--eps conflicts with --eps-rule " + sc.values.at("eps-rule"));
  }
  validate(cfg);
  return cfg;
}

int dispatch(Command cmd, const ExperimentConfig& cfg, std::ostream& os) {
  const bool json = cfg.format == OutputFormat::Json;
  switch (cmd) {
    case Command::Figure: {
      const auto series = run_figure(cfg);
      json ? write_figure_json(os, series) : write_figure_csv(os, series);
      return kExitOk;
    }
    case Command::Table: {
      const auto rows = run_table(cfg);
      json ? write_table_json(os, cfg, rows) : write_table_csv(os, cfg, rows);
      return kExitOk;
    }
    case Command::Rates: {
      const auto rows = run_rates(cfg);
      json ? write_rates_json(os, cfg, rows) : write_rates_csv(os, cfg, rows);
      return kExitOk;
    }
    case Command::Verify: {
      const auto suite = parse_suite(cfg.suite);
      if (!suite) throw ConfigError("suite", "unknown suite '" + cfg.suite + "'");
      const VerifyReport rep = run_verify(*suite, {cfg.threads});
      json ? write_verify_json(os, *suite, rep) : write_verify_csv(os, rep);
      return rep.passed() ? kExitOk : kExitVerifyFailed;
    }
  }
  return kExitError;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coordinate descent ordering experiments"};
  app.name("permcd");
  app.require_subcommand(1);

  std::vector<Subcommand> subs = {
      {Command::Figure, app.add_subcommand("figure", "per-epoch objective values"), {}, {}},
      {Command::Table, app.add_subcommand("table", "observed and predicted rates on a delta grid"), {}, {}},
      {Command::Verify, app.add_subcommand("verify", "run a verification suite"), {}, {}},
      {Command::Rates, app.add_subcommand("rates", "closed-form rate sheet"), {}, {}},
  };
  for (auto& sc : subs) add_flags(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& sc : subs) {
      if (!sc.app->parsed()) continue;
      const ExperimentConfig cfg = build_config(sc);
      if (cfg.out.empty()) return dispatch(sc.cmd, cfg, out);
      std::ofstream file(cfg.out, std::ios::binary);
      if (!file) throw ConfigError("out", "cannot open '" + cfg.out + "' for writing");
      const int code = dispatch(sc.cmd, cfg, file);
      file.close();
      if (!file) throw std::runtime_error("write to '" + cfg.out + "' failed");
      return code;
    }
  } catch (const ConfigError& e) {
    err << "permcd: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    err << "permcd: invalid parameter: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "permcd: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace permcd
