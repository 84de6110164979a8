#include "permcd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "permcd/errors.hpp"
#include "permcd/output.hpp"

namespace permcd {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw ConfigError(field, "not a finite number: '" + text + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(field, "not a non-negative integer: '" + text + "'");
  }
  return v;
}

Vec to_vector(const std::string& field, const std::string& text) {
  const auto items = split_list(text);
  if (items.empty()) throw ConfigError(field, "empty explicit vector");
  Vec v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(field, items[i]);
  return v;
}

bool to_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field, "not a boolean: '" + text + "'");
}

// "name" or "name:argument"
std::pair<std::string, std::string> split_tag(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {trim(text), {}};
  return {trim(text.substr(0, colon)), text.substr(colon + 1)};
}

}  // namespace

std::string_view to_string(MatrixFamily f) {
  switch (f) {
    case MatrixFamily::PerturbedIdentity: return "perturbed";
    case MatrixFamily::Spike: return "spike";
    case MatrixFamily::SpikedEigvec: return "spiked-eigvec";
  }
  return "unknown";
}

std::string_view to_string(EpsRule r) {
  switch (r) {
    case EpsRule::Equal: return "equal";
    case EpsRule::SqrtDeltaOver10: return "sqrt-delta-over-10";
    case EpsRule::Fixed: return "fixed";
  }
  return "unknown";
}

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
  std::vector<std::uint64_t> out(seeds);
  for (std::size_t k = 0; k < seeds; ++k) out[k] = seed_base + k;
  return out;
}

double ExperimentConfig::eps_for(double delta) const {
  if (family == MatrixFamily::Spike) return 0.0;
  switch (eps_rule) {
    case EpsRule::Equal: return delta;
    case EpsRule::SqrtDeltaOver10: return std::sqrt(delta / 10.0);
    case EpsRule::Fixed: return eps;
  }
  return eps;
}

ExperimentConfig default_config(Command cmd) {
  ExperimentConfig cfg;
  switch (cmd) {
    case Command::Figure:
      break;
    case Command::Table:
      cfg.deltas = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
      cfg.epochs = 2000;
      cfg.seeds = 5;
      cfg.stop_below = 1e-260;
      break;
    case Command::Rates:
      cfg.deltas = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
      break;
    case Command::Verify:
      cfg.format = OutputFormat::Json;
      break;
  }
  return cfg;
}

std::vector<Setting> parse_config_text(std::string_view text) {
  std::vector<Setting> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    out.emplace_back(normalize_key(std::move(key)), trim(body.substr(eq + 1)));
  }
  return out;
}

std::vector<Setting> load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

DiagSpec parse_d_spec(const std::string& text) {
  const auto [tag, arg] = split_tag(text);
  if (tag == "linspace" && arg.empty()) return Linspace{};
  if (tag == "uniform") return SeededUniformRescaled{to_uint("d-spec", arg)};
  if (tag == "explicit") return ExplicitWeights{to_vector("d-spec", arg)};
  throw ConfigError("d-spec", "expected linspace | uniform:<seed> | explicit:<v1,v2,...>, got '" + text + "'");
}

EigvecSpec parse_u_spec(const std::string& text) {
  const auto [tag, arg] = split_tag(text);
  if (tag == "band") return SeededUniformInBand{to_uint("u-spec", arg)};
  if (tag == "explicit") return ExplicitEigvec{to_vector("u-spec", arg)};
  throw ConfigError("u-spec", "expected band:<seed> | explicit:<v1,v2,...>, got '" + text + "'");
}

X0Spec parse_x0_spec(const std::string& text) {
  const auto [tag, arg] = split_tag(text);
  if (tag == "stdnormal" && arg.empty()) return StdNormalX0{};
  if (tag == "ones" && arg.empty()) return OnesX0{};
  if (tag == "explicit") return ExplicitX0{to_vector("x0", arg)};
  throw ConfigError("x0", "expected stdnormal | ones | explicit:<v1,v2,...>, got '" + text + "'");
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  if (key == "family") {
    if (value == "perturbed") cfg.family = MatrixFamily::PerturbedIdentity;
    else if (value == "spike") cfg.family = MatrixFamily::Spike;
    else if (value == "spiked-eigvec") cfg.family = MatrixFamily::SpikedEigvec;
    else throw ConfigError(key, "expected perturbed | spike | spiked-eigvec, got '" + value + "'");
  } else if (key == "n") {
    cfg.n = to_uint(key, value);
  } else if (key == "delta") {
    cfg.deltas.clear();
    for (const auto& item : split_list(value)) cfg.deltas.push_back(to_double(key, item));
    if (cfg.deltas.empty()) throw ConfigError(key, "empty list");
  } else if (key == "eps") {
    cfg.eps = to_double(key, value);
    cfg.eps_rule = EpsRule::Fixed;
  } else if (key == "eps-rule") {
    if (value == "equal") cfg.eps_rule = EpsRule::Equal;
    else if (value == "sqrt-delta-over-10") cfg.eps_rule = EpsRule::SqrtDeltaOver10;
    else if (value == "fixed") cfg.eps_rule = EpsRule::Fixed;
    else throw ConfigError(key, "expected equal | sqrt-delta-over-10 | fixed, got '" + value + "'");
  } else if (key == "d-spec") {
    cfg.d_spec = parse_d_spec(value);
  } else if (key == "u-spec") {
    cfg.u_spec = parse_u_spec(value);
  } else if (key == "companion") {
    cfg.companion = to_bool(key, value);
  } else if (key == "strategy") {
    cfg.strategies.clear();
    for (const auto& item : split_list(value)) {
      const auto o = parse_ordering(item);
      if (!o) throw ConfigError(key, "unknown strategy '" + item + "'");
      cfg.strategies.push_back(*o);
    }
    if (cfg.strategies.empty()) throw ConfigError(key, "empty list");
  } else if (key == "epochs") {
    cfg.epochs = to_uint(key, value);
  } else if (key == "seeds") {
    cfg.seeds = to_uint(key, value);
  } else if (key == "seed-base") {
    cfg.seed_base = to_uint(key, value);
  } else if (key == "x0") {
    cfg.x0 = parse_x0_spec(value);
  } else if (key == "window") {
    cfg.window = to_uint(key, value);
  } else if (key == "stop-below") {
    cfg.stop_below = to_double(key, value);
  } else if (key == "rho-bar") {
    cfg.rho_bar = to_double(key, value);
  } else if (key == "suite") {
    cfg.suite = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(to_uint(key, value));
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    if (value == "csv") cfg.format = OutputFormat::Csv;
    else if (value == "json") cfg.format = OutputFormat::Json;
    else throw ConfigError(key, "expected csv | json, got '" + value + "'");
  } else {
    throw ConfigError(key, "unknown setting");
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n == 0) throw ConfigError("n", "must be >= 1");
  if (cfg.n > 100000) throw ConfigError("n", "must be <= 100000");
  if (cfg.seeds == 0) throw ConfigError("seeds", "must be >= 1");
  if (cfg.window == 0) throw ConfigError("window", "must be >= 1");
  if (cfg.rho_bar < 0.0) throw ConfigError("rho-bar", "must be >= 0");
  if (cfg.stop_below < 0.0) throw ConfigError("stop-below", "must be >= 0");
  if (cfg.eps_rule == EpsRule::Fixed && cfg.eps < 0.0) throw ConfigError("eps", "must be >= 0");

  const double upper = cfg.n == 1 ? std::numeric_limits<double>::infinity() : static_cast<double>(cfg.n) / static_cast<double>(cfg.n - 1);
  for (double delta : cfg.deltas) {
    if (!(delta > 0.0) || !(delta < upper)) {
      throw ConfigError("delta", "value " + format_double(delta) + " outside (0, n/(n-1))");
    }
    const double eps = cfg.eps_for(delta);
    try {
      if (cfg.family == MatrixFamily::SpikedEigvec) {
        if (!(delta < 1.0)) throw ConfigError("delta", "spiked-eigvec family needs delta < 1");
        if (!(eps > 0.0)) throw ConfigError("eps", "spiked-eigvec family needs eps > 0");
        (void)build_spiked_eigvec(cfg.n, delta, eps, cfg.u_spec);
      } else {
        (void)build_perturbed_identity(cfg.n, delta, eps, cfg.d_spec);
      }
    } catch (const InvalidParameter& e) {
      const bool about_u = cfg.family == MatrixFamily::SpikedEigvec;
      throw ConfigError(about_u ? "u-spec" : "d-spec", e.what());
    }
  }
  if (const auto* x = std::get_if<ExplicitX0>(&cfg.x0); x && static_cast<std::size_t>(x->values.size()) != cfg.n) {
    throw ConfigError("x0", "explicit x0 length differs from n");
  }
}

}  // namespace permcd
