#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "ensmetro/domain.hpp"
#include "ensmetro/signal.hpp"

namespace ensmetro {

enum class FitStatus { Converged, NotConverged, PhaseAmbiguous };
std::string to_string(FitStatus s);

struct EstimateResult {
  double c_hat = 0.0;
  double alpha_hat = 0.0;
  double delta_hat = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  FitStatus status = FitStatus::NotConverged;
};

struct FitOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 500;
};

/// |delta| (K T_w + (M-1) t_s) < pi: the total readout phase stays on one
/// branch, so delta is identified without aliasing (K T_w term for Quantum only).
bool in_identifiability_window(double delta, Strategy kind, const SpinSystem& sys,
                               const AcquisitionGrid& grid);

/// Periodogram peak, then weighted regressions on phase and log-magnitude.
EstimateResult initial_estimate(const SignalTrace& trace, Strategy kind, const SpinSystem& sys,
                                const AcquisitionGrid& grid);

/// Least-squares fit of (c, alpha, delta) by Levenberg-Marquardt; beta is
/// known. Equivalent to maximum likelihood under white circular Gaussian noise.
EstimateResult fit_fid(const SignalTrace& trace, Strategy kind, const SpinSystem& sys,
                       const AcquisitionGrid& grid,
                       const std::optional<EstimateResult>& init = std::nullopt,
                       const FitOptions& options = {});

struct MonteCarloReport {
  Strategy strategy = Strategy::Classical;
  int n_trials = 0;
  double delta_mean_empirical = 0.0;
  double delta_std_empirical = 0.0;
  double crb_delta = 0.0;
  double efficiency = 0.0;  // delta_std_empirical / crb_delta
  int failure_count = 0;
  bool valid = false;  // failure fraction <= 5%
};

/// Noise seed of trial `index`: the index-th output of a SplitMix64 stream
/// started at `master`.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index);

MonteCarloReport monte_carlo(Strategy kind, const SpinSystem& sys, const AcquisitionGrid& grid,
                             const SignalParams& params, int n_trials, std::uint64_t seed,
                             int jobs = 1);

void write_report(std::ostream& os, const MonteCarloReport& rep);

}  // namespace ensmetro
