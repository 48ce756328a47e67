#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ensmetro/domain.hpp"

namespace ensmetro {

/// Everything a command needs, validated as a whole before any computation.
///
/// File format: INI-style sections with key = value lines; `#` or `;` start
/// comments. Lists are comma separated and may use `start:stop:step` ranges.
/// Precedence: command-line overrides > file > built-in defaults.
struct RunConfig {
  SpinSystem system{.k_spins = 10, .decoherence = PowerLaw{0.11}};
  AcquisitionGrid grid;
  bool t_wait_optimal = true;  // grid.t_wait resolved from the closed-form optimum
  SignalParams signal{.amplitude = 1.0, .noise_sigma = 0.01, .delta = 0.2};

  std::vector<int> sweep_k = {2, 4, 8, 13, 16, 32, 64};
  std::vector<double> sweep_p;

  int mc_trials = 1000;
  std::string mc_strategy = "both";  // classical | quantum | both

  std::vector<int> oracle_k = {2, 3, 4, 5, 6};
  std::vector<double> oracle_j = {0.0, 0.3};  // units of 1/T2*
  std::vector<std::string> oracle_channels = {"uncorrelated", "collective"};
  std::optional<double> oracle_analytic_p;  // negative control: force this beta exponent
  double oracle_tolerance = 1e-8;

  std::uint64_t seed = 42;
  int jobs = 1;
  int k_max = 10;
  std::string out_dir = ".";

  // Provenance: the file text and overrides exactly as given.
  std::string source_name;
  std::string source_text;
  std::vector<std::string> overrides;

  /// Lines prefixed with "# " for the top of every output file.
  std::string provenance() const;
};

/// Builds a config from file text plus `section.key=value` overrides.
RunConfig parse_config(const std::string& text, const std::string& source_name,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Parses "1,2,3" or "0:2:0.5" (inclusive) or a mix.
std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

DecoherenceModel parse_decoherence(const std::string& name, double p);

}  // namespace ensmetro
