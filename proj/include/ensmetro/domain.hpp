#pragma once

#include <string>
#include <variant>

namespace ensmetro {

/// Decoherence of the K-spin GHZ coherence relative to a single spin.
/// The GHZ dephasing rate is beta = K^p * alpha with p = 1 (Uncorrelated),
/// p = 2 (Collective) or an explicit exponent in [0, 2].
struct Uncorrelated {};
struct Collective {};
struct PowerLaw {
  double p = 1.0;
};
using DecoherenceModel = std::variant<Uncorrelated, Collective, PowerLaw>;

/// Scaling exponent p of a model.
double scaling_exponent(const DecoherenceModel& model);
std::string to_string(const DecoherenceModel& model);

/// One star-topology molecule: a central spin A plus k_spins - 1 satellites.
/// Rates are stored as a positive T2* time; alpha() is derived and negative.
struct SpinSystem {
  int k_spins = 1;
  double gamma_ratio = 1.0;
  double ising_j = 0.0;  // rad/s
  double t2_star = 1.0;  // s
  DecoherenceModel decoherence = Uncorrelated{};

  double alpha() const { return -1.0 / t2_star; }
};

struct AcquisitionGrid {
  double t_sample = 1e-2;  // s
  int n_samples = 512;
  double t_wait = 0.0;  // s, GHZ interval (ignored by the classical strategy)

  double time(int m) const { return m * t_sample; }
  double readout_length() const { return (n_samples - 1) * t_sample; }
};

struct SignalParams {
  double amplitude = 1.0;
  double noise_sigma = 0.0;
  double delta = 0.0;  // rad/s

  double snr() const { return amplitude / noise_sigma; }
};

enum class Strategy { Classical, Quantum };
std::string to_string(Strategy s);

// Throw ValidationError when a type invariant does not hold.
void validate(const SpinSystem& sys);
void validate(const AcquisitionGrid& grid);
void validate(const SignalParams& params);
void validate(const DecoherenceModel& model);

/// GHZ dephasing rate beta (<= alpha <= 0).
double beta_rate(const SpinSystem& sys);

/// Scaling exponent implied by a single-spin and a K-spin GHZ T2*:
/// p = ln(t2_single / t2_ghz) / ln(k).
double infer_power_exponent(double t2_single, double t2_ghz, int k);

}  // namespace ensmetro
