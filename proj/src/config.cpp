#include "ensmetro/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ensmetro/errors.hpp"
#include "ensmetro/fisher.hpp"

namespace ensmetro {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"system", {"k_spins", "gamma_ratio", "ising_j", "t2_star", "decoherence", "p"}},
      {"grid", {"t_sample", "n_samples", "t_wait"}},
      {"signal", {"amplitude", "noise_sigma", "delta"}},
      {"sweep", {"k_values", "p_values"}},
      {"montecarlo", {"n_trials", "strategy"}},
      {"oracle", {"k_values", "j_values", "channels", "analytic_p", "tolerance"}},
      {"run", {"seed", "jobs", "k_max", "out"}},
  };
  return keys;
}

using Entries = std::map<std::string, std::string>;  // "section.key" -> value

void put(Entries& entries, const std::string& section, const std::string& key,
         const std::string& value) {
  const auto& keys = known_keys();
  const auto sec = keys.find(section);
  if (sec == keys.end()) throw ValidationError("unknown config section [" + section + "]");
  if (!sec->second.count(key)) {
    throw ValidationError("unknown config key '" + key + "' in section [" + section + "]");
  }
  // A ';' or '#' after whitespace starts a trailing comment.
  std::string v = value;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if ((v[i] == ';' || v[i] == '#') && std::isspace(static_cast<unsigned char>(v[i - 1]))) {
      v.erase(i);
      break;
    }
  }
  entries[section + "." + key] = boost::algorithm::trim_copy(v);
}

double to_real(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config " + name + ": '" + text + "' is not a number");
  }
}

long long to_integer(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config " + name + ": '" + text + "' is not an integer");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(to_real("list", parts[0]));
    } else if (parts.size() == 3) {
      const double start = to_real("range", parts[0]);
      const double stop = to_real("range", parts[1]);
      const double step = to_real("range", parts[2]);
      if (!(step > 0.0) || stop < start) throw ValidationError("bad range '" + item + "'");
      const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
      for (long long i = 0; i <= count; ++i) {
        // Snap to 12 decimals so 0:2:0.1 yields 0.3 rather than 0.30000000000000004.
        out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
      }
    } else {
      throw ValidationError("bad list item '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty list '" + text + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_real_list(text)) {
    if (v != std::floor(v)) throw ValidationError("expected integers in '" + text + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

DecoherenceModel parse_decoherence(const std::string& name, double p) {
  if (name == "uncorrelated") return Uncorrelated{};
  if (name == "collective") return Collective{};
  if (name == "power_law") return PowerLaw{p};
  throw ValidationError("unknown decoherence model '" + name +
                        "' (expected uncorrelated, collective or power_law)");
}

RunConfig parse_config(const std::string& text, const std::string& source_name,
                       const std::vector<std::string>& overrides) {
  Entries entries;
  {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ValidationError("config " + source_name + ": " + e.message() + " (line " +
                            std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw ValidationError("config key '" + section + "' outside a section");
      for (const auto& [key, value] : body) put(entries, section, key, value.data());
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    const auto dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ValidationError("override '" + ov + "' is not section.key=value");
    }
    put(entries, boost::algorithm::trim_copy(ov.substr(0, dot)),
        boost::algorithm::trim_copy(ov.substr(dot + 1, eq - dot - 1)), ov.substr(eq + 1));
  }

  RunConfig cfg;
  cfg.sweep_p = parse_real_list("0:2:0.1");
  cfg.source_name = source_name;
  cfg.source_text = text;
  cfg.overrides = overrides;

  auto has = [&](const char* k) { return entries.count(k) > 0; };
  auto real = [&](const char* k) { return to_real(k, entries.at(k)); };
  auto integer = [&](const char* k) { return to_integer(k, entries.at(k)); };

  if (has("system.k_spins")) cfg.system.k_spins = static_cast<int>(integer("system.k_spins"));
  if (has("system.gamma_ratio")) cfg.system.gamma_ratio = real("system.gamma_ratio");
  if (has("system.ising_j")) cfg.system.ising_j = real("system.ising_j");
  if (has("system.t2_star")) cfg.system.t2_star = real("system.t2_star");
  if (has("system.decoherence") || has("system.p")) {
    const std::string name =
        has("system.decoherence") ? entries.at("system.decoherence") : std::string("power_law");
    // system.p is read only for power_law, so an override such as
    // system.decoherence=collective works against a file that sets p.
    cfg.system.decoherence = parse_decoherence(name, has("system.p") ? real("system.p") : 1.0);
  }

  if (has("grid.t_sample")) cfg.grid.t_sample = real("grid.t_sample");
  if (has("grid.n_samples")) cfg.grid.n_samples = static_cast<int>(integer("grid.n_samples"));
  if (has("grid.t_wait")) {
    if (entries.at("grid.t_wait") == "optimal") {
      cfg.t_wait_optimal = true;
    } else {
      cfg.t_wait_optimal = false;
      cfg.grid.t_wait = real("grid.t_wait");
    }
  }

  if (has("signal.amplitude")) cfg.signal.amplitude = real("signal.amplitude");
  if (has("signal.noise_sigma")) cfg.signal.noise_sigma = real("signal.noise_sigma");
  if (has("signal.delta")) cfg.signal.delta = real("signal.delta");

  if (has("sweep.k_values")) cfg.sweep_k = parse_int_list(entries.at("sweep.k_values"));
  if (has("sweep.p_values")) cfg.sweep_p = parse_real_list(entries.at("sweep.p_values"));

  if (has("montecarlo.n_trials")) cfg.mc_trials = static_cast<int>(integer("montecarlo.n_trials"));
  if (has("montecarlo.strategy")) cfg.mc_strategy = entries.at("montecarlo.strategy");

  if (has("oracle.k_values")) cfg.oracle_k = parse_int_list(entries.at("oracle.k_values"));
  if (has("oracle.j_values")) cfg.oracle_j = parse_real_list(entries.at("oracle.j_values"));
  if (has("oracle.channels")) cfg.oracle_channels = split(entries.at("oracle.channels"), ',');
  if (has("oracle.analytic_p")) cfg.oracle_analytic_p = real("oracle.analytic_p");
  if (has("oracle.tolerance")) cfg.oracle_tolerance = real("oracle.tolerance");

  if (has("run.seed")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(entries.at("run.seed"), &used);
      if (used != entries.at("run.seed").size()) throw std::invalid_argument("seed");
    } catch (const std::exception&) {
      throw ValidationError("config run.seed: not an unsigned 64-bit integer");
    }
  }
  if (has("run.jobs")) cfg.jobs = static_cast<int>(integer("run.jobs"));
  if (has("run.k_max")) cfg.k_max = static_cast<int>(integer("run.k_max"));
  if (has("run.out")) cfg.out_dir = entries.at("run.out");

  // Validation of the assembled config.
  validate(cfg.system);
  validate(cfg.signal);
  if (cfg.t_wait_optimal) {
    const double p = scaling_exponent(cfg.system.decoherence);
    cfg.grid.t_wait = best_r_infinity(cfg.system.k_spins, p, cfg.system.t2_star).t_wait_opt;
  }
  validate(cfg.grid);
  for (int k : cfg.sweep_k) {
    if (k < 1) throw ValidationError("sweep.k_values must be >= 1");
  }
  for (double p : cfg.sweep_p) {
    if (!(p >= 0.0 && p <= 2.0)) throw ValidationError("sweep.p_values must lie in [0, 2]");
  }
  if (cfg.mc_trials < 100) throw ValidationError("montecarlo.n_trials must be >= 100");
  if (cfg.mc_strategy != "classical" && cfg.mc_strategy != "quantum" && cfg.mc_strategy != "both") {
    throw ValidationError("montecarlo.strategy must be classical, quantum or both");
  }
  for (const auto& ch : cfg.oracle_channels) {
    if (ch != "uncorrelated" && ch != "collective" && ch != "spin_a") {
      throw ValidationError("oracle.channels entries must be uncorrelated, collective or spin_a");
    }
  }
  if (cfg.oracle_analytic_p && !(*cfg.oracle_analytic_p >= 0.0 && *cfg.oracle_analytic_p <= 2.0)) {
    throw ValidationError("oracle.analytic_p must lie in [0, 2]");
  }
  if (!(cfg.oracle_tolerance > 0.0)) throw ValidationError("oracle.tolerance must be positive");
  if (cfg.jobs < 1) throw ValidationError("run.jobs must be >= 1");
  if (cfg.k_max < 1 || cfg.k_max > 14) throw ValidationError("run.k_max must lie in [1, 14]");
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_config("", "<defaults>", overrides);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path, overrides);
}

std::string RunConfig::provenance() const {
  std::ostringstream os;
  os << "# config: " << source_name << '\n';
  std::istringstream lines(source_text);
  std::string line;
  while (std::getline(lines, line)) os << "# " << line << '\n';
  // Output location and worker count do not affect results.
  for (const auto& ov : overrides) {
    if (ov.rfind("run.out=", 0) == 0 || ov.rfind("run.jobs=", 0) == 0) continue;
    os << "# override: " << ov << '\n';
  }
  return os.str();
}

}  // namespace ensmetro
