#include "ensmetro/domain.hpp"

#include <cmath>
#include <sstream>

#include "ensmetro/errors.hpp"

namespace ensmetro {

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
}  // namespace

double scaling_exponent(const DecoherenceModel& model) {
  return std::visit(Overloaded{[](const Uncorrelated&) { return 1.0; },
                               [](const Collective&) { return 2.0; },
                               [](const PowerLaw& pl) { return pl.p; }},
                    model);
}

std::string to_string(const DecoherenceModel& model) {
  return std::visit(Overloaded{[](const Uncorrelated&) { return std::string("uncorrelated"); },
                               [](const Collective&) { return std::string("collective"); },
                               [](const PowerLaw& pl) {
                                 std::ostringstream os;
                                 os.precision(17);
                                 os << "power_law(" << pl.p << ")";
                                 return os.str();
                               }},
                    model);
}

std::string to_string(Strategy s) { return s == Strategy::Classical ? "classical" : "quantum"; }

void validate(const DecoherenceModel& model) {
  if (const auto* pl = std::get_if<PowerLaw>(&model)) {
    if (!(pl->p >= 0.0 && pl->p <= 2.0)) {
      throw ValidationError("power-law exponent p must lie in [0, 2]");
    }
  }
}

void validate(const SpinSystem& sys) {
  if (sys.k_spins < 1) throw ValidationError("k_spins must be >= 1");
  if (!(sys.t2_star > 0.0) || !std::isfinite(sys.t2_star)) {
    throw ValidationError("t2_star must be a positive finite time");
  }
  if (!std::isfinite(sys.gamma_ratio) || !std::isfinite(sys.ising_j)) {
    throw ValidationError("gamma_ratio and ising_j must be finite");
  }
  validate(sys.decoherence);
}

void validate(const AcquisitionGrid& grid) {
  if (!(grid.t_sample > 0.0) || !std::isfinite(grid.t_sample)) {
    throw ValidationError("t_sample must be positive");
  }
  if (grid.n_samples < 2) throw ValidationError("n_samples must be >= 2");
  if (!(grid.t_wait >= 0.0) || !std::isfinite(grid.t_wait)) {
    throw ValidationError("t_wait must be non-negative");
  }
}

void validate(const SignalParams& params) {
  if (!(params.amplitude > 0.0) || !std::isfinite(params.amplitude)) {
    throw ValidationError("amplitude must be positive");
  }
  if (!(params.noise_sigma >= 0.0) || !std::isfinite(params.noise_sigma)) {
    throw ValidationError("noise_sigma must be non-negative");
  }
  if (!std::isfinite(params.delta)) throw ValidationError("delta must be finite");
}

double beta_rate(const SpinSystem& sys) {
  validate(sys);
  const double k = sys.k_spins;
  return std::visit(Overloaded{[&](const Uncorrelated&) { return k * sys.alpha(); },
                               [&](const Collective&) { return k * k * sys.alpha(); },
                               [&](const PowerLaw& pl) { return std::pow(k, pl.p) * sys.alpha(); }},
                    sys.decoherence);
}

double infer_power_exponent(double t2_single, double t2_ghz, int k) {
  if (!(t2_single > 0.0) || !(t2_ghz > 0.0)) throw ValidationError("T2* times must be positive");
  if (k < 2) throw ValidationError("k must be >= 2 to identify the exponent");
  if (t2_ghz > t2_single) {
    throw ValidationError("GHZ T2* longer than single-spin T2* implies p < 0");
  }
  return std::log(t2_single / t2_ghz) / std::log(static_cast<double>(k));
}

}  // namespace ensmetro
