#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ensmetro/domain.hpp"
#include "ensmetro/fisher.hpp"

namespace ensmetro {

/// Sensitivity per root bandwidth for back-to-back slices of length T:
/// S = sqrt(T) * CRB, with the CRB sum replaced by its integral / t_s.
double s_classical(double slice_time, const SpinSystem& sys, double t_sample, double snr);

/// As s_classical, but the slice holds a silent GHZ wait T_w followed by a
/// readout window of length T - T_w.
double s_quantum(double slice_time, double t_wait, const SpinSystem& sys, double t_sample,
                 double snr);
double log_s_quantum(double slice_time, double t_wait, const SpinSystem& sys, double t_sample,
                     double snr);

/// S in units of sqrt(t_s) |alpha| sigma / c.
double normalized_sensitivity(double s, const SpinSystem& sys, double t_sample, double snr);

struct OptimumReport {
  Strategy strategy = Strategy::Classical;
  double t_star = 0.0;
  double t_wait_star = 0.0;
  double s_star = 0.0;           // integral approximation (what is optimized)
  double s_star_discrete = 0.0;  // same slice evaluated with the discrete CRB sum
  int k_spins = 1;
  double p = 0.0;
  int starts = 1;
  int starts_converged = 1;
  double start_spread = 0.0;  // max distance in (T, T_w) between converged starts
  bool starts_agree = true;
};

struct OptimizerSettings {
  double tolerance = 1e-6;  // in units of T2*
  double t_max = 10.0;      // slice search bound, units of T2*
  double t_wait_max = 5.0;  // wait search bound, units of T2*
  int scan_points = 64;
};

/// Golden-section search over T in [t_s, t_max T2*] after a unimodality scan.
OptimumReport optimize_classical(const SpinSystem& sys, double t_sample, double snr,
                                 const OptimizerSettings& settings = {});

/// Nelder-Mead over (readout, T_w) from the four corners of the search box.
OptimumReport optimize_quantum(const SpinSystem& sys, double t_sample, double snr,
                               const OptimizerSettings& settings = {});

/// Numeric argmax of ratio_r_infinity over T_w in [0, 5 T2*].
RatioOptimum maximize_ratio_numeric(const SpinSystem& sys, double tolerance = 1e-12);

struct SweepRow {
  int k_spins = 1;
  double p = 0.0;
  RatioOptimum ratio;
  OptimumReport ghz;
  bool ok = false;
  std::string error;
};

SweepRow sweep_cell(int k, double p, const SpinSystem& tmpl, double t_sample, double snr);

/// One row per (K, p), K-major, independent of `jobs`.
std::vector<SweepRow> sweep(const std::vector<int>& k_values, const std::vector<double>& p_values,
                            const SpinSystem& tmpl, double t_sample, double snr, int jobs = 1);

/// `K,p,R_max,Tw_opt_ratio,S_star_ghz,T_star,Tw_star`; times in T2*, S normalized.
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepRow& row, const SpinSystem& tmpl,
                     double t_sample, double snr);

void write_optimum(std::ostream& os, const OptimumReport& rep, const SpinSystem& sys,
                   double t_sample, double snr);

}  // namespace ensmetro
