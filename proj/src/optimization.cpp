#include "ensmetro/optimization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "ensmetro/errors.hpp"
#include "ensmetro/format.hpp"
#include "ensmetro/numerics.hpp"
#include "ensmetro/parallel.hpp"

namespace ensmetro {

namespace {

void check_common(const SpinSystem& sys, double t_sample, double snr) {
  validate(sys);
  if (!(t_sample > 0.0)) throw ValidationError("t_sample must be positive");
  if (!(snr > 0.0)) throw ValidationError("snr must be positive");
}

double log_s_impl(double slice_time, double t_wait, double lever, double log_attenuation,
                  const SpinSystem& sys, double t_sample, double snr) {
  const double readout = slice_time - t_wait;
  const double energy = numerics::shifted_quadratic_exp_integral(
      lever, -2.0 * sys.alpha(), readout);
  return 0.5 * std::log(slice_time) - log_attenuation + 0.5 * std::log(t_sample) -
         0.5 * std::log(energy) - std::log(snr);
}

double discrete_sensitivity(Strategy kind, double slice_time, double t_wait,
                            const SpinSystem& sys, double t_sample, double snr) {
  AcquisitionGrid grid;
  grid.t_sample = t_sample;
  grid.t_wait = kind == Strategy::Quantum ? t_wait : 0.0;
  grid.n_samples = std::max(2, static_cast<int>(std::lround((slice_time - t_wait) / t_sample)));
  const double log_crb = kind == Strategy::Quantum ? log_crb_delta_ghz_closed(sys, grid, snr)
                                                   : log_crb_delta_std_closed(sys, grid, snr);
  return std::exp(0.5 * std::log(slice_time) + log_crb);
}

}  // namespace

double log_s_quantum(double slice_time, double t_wait, const SpinSystem& sys, double t_sample,
                     double snr) {
  check_common(sys, t_sample, snr);
  if (!(t_wait >= 0.0) || !(slice_time > t_wait)) {
    throw ValidationError("quantum slice needs 0 <= T_w < T");
  }
  return log_s_impl(slice_time, t_wait, sys.k_spins * t_wait, beta_rate(sys) * t_wait, sys,
                    t_sample, snr);
}

double s_quantum(double slice_time, double t_wait, const SpinSystem& sys, double t_sample,
                 double snr) {
  return std::exp(log_s_quantum(slice_time, t_wait, sys, t_sample, snr));
}

double s_classical(double slice_time, const SpinSystem& sys, double t_sample, double snr) {
  check_common(sys, t_sample, snr);
  if (!(slice_time > t_sample)) throw ValidationError("slice time must exceed t_sample");
  return std::exp(log_s_impl(slice_time, 0.0, 0.0, 0.0, sys, t_sample, snr));
}

double normalized_sensitivity(double s, const SpinSystem& sys, double t_sample, double snr) {
  return s * snr / (std::sqrt(t_sample) * std::abs(sys.alpha()));
}

OptimumReport optimize_classical(const SpinSystem& sys, double t_sample, double snr,
                                 const OptimizerSettings& settings) {
  check_common(sys, t_sample, snr);
  const double lo = t_sample * (1.0 + 1e-9);
  const double hi = settings.t_max * sys.t2_star;
  if (!(hi > lo)) throw NumericalError("bracket failure: t_sample exceeds the search interval");

  auto f = [&](double t) { return std::log(s_classical(t, sys, t_sample, snr)); };
  const auto bracket = numerics::scan_bracket(f, lo, hi, settings.scan_points);
  if (!bracket.unimodal || bracket.hi >= hi) {
    throw NumericalError("bracket failure: S_STD is not unimodal on the search interval");
  }
  const auto min = numerics::golden_section(f, bracket.lo, bracket.hi,
                                            settings.tolerance * sys.t2_star);
  if (!min.converged) throw NumericalError("golden-section search did not converge");

  OptimumReport rep;
  rep.strategy = Strategy::Classical;
  rep.t_star = min.x;
  rep.t_wait_star = 0.0;
  rep.s_star = s_classical(min.x, sys, t_sample, snr);
  rep.s_star_discrete = discrete_sensitivity(Strategy::Classical, min.x, 0.0, sys, t_sample, snr);
  rep.k_spins = sys.k_spins;
  rep.p = scaling_exponent(sys.decoherence);
  return rep;
}

OptimumReport optimize_quantum(const SpinSystem& sys, double t_sample, double snr,
                               const OptimizerSettings& settings) {
  check_common(sys, t_sample, snr);
  const double t2 = sys.t2_star;
  const double readout_hi = settings.t_max * t2;
  const double wait_hi = settings.t_wait_max * t2;
  if (!(readout_hi > t_sample)) throw NumericalError("search box is empty: t_sample too large");

  const double lever_per_wait = sys.k_spins;
  const double beta = beta_rate(sys);
  // readout = t_s + l^2, T_w = w^2
  auto objective = [&](const Eigen::Vector2d& v) {
    const double readout = t_sample + v[0] * v[0];
    const double wait = v[1] * v[1];
    return log_s_impl(readout + wait, wait, lever_per_wait * wait, beta * wait, sys, t_sample,
                      snr);
  };

  const double inset_r = 0.01 * (readout_hi - t_sample);
  const double inset_w = 0.01 * wait_hi;
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(inset_r, inset_w), Eigen::Vector2d(readout_hi - t_sample - inset_r, inset_w),
      Eigen::Vector2d(inset_r, wait_hi - inset_w),
      Eigen::Vector2d(readout_hi - t_sample - inset_r, wait_hi - inset_w)};

  const double xtol = 1e-3 * settings.tolerance * std::sqrt(t2);
  const Eigen::Vector2d step = Eigen::Vector2d::Constant(0.25 * std::sqrt(t2));

  struct Start {
    Eigen::Vector2d x;
    double fx;
    bool converged;
  };
  std::vector<Start> results;
  for (const auto& corner : corners) {
    const Eigen::Vector2d x0(std::sqrt(corner[0]), std::sqrt(corner[1]));
    auto run = numerics::nelder_mead<double, 2>(objective, x0, step, xtol);
    // Restart from the incumbent with a fresh simplex to escape collapse.
    for (int restart = 0; restart < 3; ++restart) {
      auto again = numerics::nelder_mead<double, 2>(
          objective, run.x, Eigen::Vector2d::Constant(1e-3 * std::sqrt(t2)), xtol);
      const bool moved = (again.x - run.x).cwiseAbs().maxCoeff() > xtol;
      if (again.fx <= run.fx) run = again;
      if (!moved) break;
    }
    results.push_back({run.x, run.fx, run.converged});
  }

  auto to_times = [&](const Eigen::Vector2d& v) {
    const double wait = v[1] * v[1];
    return Eigen::Vector2d(t_sample + v[0] * v[0] + wait, wait);
  };

  const auto best = std::min_element(results.begin(), results.end(),
                                     [](const Start& a, const Start& b) { return a.fx < b.fx; });
  OptimumReport rep;
  rep.strategy = Strategy::Quantum;
  rep.k_spins = sys.k_spins;
  rep.p = scaling_exponent(sys.decoherence);
  rep.starts = static_cast<int>(results.size());
  rep.starts_converged = 0;
  const Eigen::Vector2d best_times = to_times(best->x);
  for (const auto& r : results) {
    if (!r.converged) continue;
    ++rep.starts_converged;
    rep.start_spread =
        std::max(rep.start_spread, (to_times(r.x) - best_times).cwiseAbs().maxCoeff());
  }
  rep.starts_agree = rep.start_spread <= settings.tolerance * t2;
  if (rep.starts_converged == 0) throw NumericalError("no Nelder-Mead start converged");

  rep.t_star = best_times[0];
  rep.t_wait_star = best_times[1];
  rep.s_star = std::exp(best->fx);
  rep.s_star_discrete =
      discrete_sensitivity(Strategy::Quantum, rep.t_star, rep.t_wait_star, sys, t_sample, snr);
  return rep;
}

RatioOptimum maximize_ratio_numeric(const SpinSystem& sys, double tolerance) {
  validate(sys);
  const double hi = 5.0 * sys.t2_star;
  auto f = [&](double tw) { return -log_ratio_r_infinity(sys, tw); };
  const auto bracket = numerics::scan_bracket(f, 0.0, hi, 64);
  if (!bracket.unimodal) throw NumericalError("R_inf is not unimodal on [0, 5 T2*]");
  const auto min = numerics::golden_section(f, bracket.lo, bracket.hi, tolerance * sys.t2_star,
                                            10000);
  RatioOptimum opt;
  opt.t_wait_opt = min.x;
  opt.r_max = ratio_r_infinity(sys, min.x);
  return opt;
}

SweepRow sweep_cell(int k, double p, const SpinSystem& tmpl, double t_sample, double snr) {
  SweepRow row;
  row.k_spins = k;
  row.p = p;
  try {
    SpinSystem sys = tmpl;
    sys.k_spins = k;
    sys.decoherence = PowerLaw{p};
    row.ratio = best_r_infinity(k, p, sys.t2_star);
    row.ghz = optimize_quantum(sys, t_sample, snr);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

std::vector<SweepRow> sweep(const std::vector<int>& k_values, const std::vector<double>& p_values,
                            const SpinSystem& tmpl, double t_sample, double snr, int jobs) {
  if (k_values.empty() || p_values.empty()) throw ValidationError("sweep grids must be non-empty");
  const int n = static_cast<int>(k_values.size() * p_values.size());
  std::vector<SweepRow> rows(static_cast<std::size_t>(n));
  parallel_ranges(n, jobs, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const auto ki = static_cast<std::size_t>(i) / p_values.size();
      const auto pi = static_cast<std::size_t>(i) % p_values.size();
      rows[static_cast<std::size_t>(i)] = sweep_cell(k_values[ki], p_values[pi], tmpl, t_sample, snr);
    }
  });
  return rows;
}

void write_sweep_header(std::ostream& os) {
  os << "K,p,R_max,Tw_opt_ratio,S_star_ghz,T_star,Tw_star\n";
}

void write_sweep_row(std::ostream& os, const SweepRow& row, const SpinSystem& tmpl,
                     double t_sample, double snr) {
  const double nan = std::nan("");
  const double t2 = tmpl.t2_star;
  os << row.k_spins << ',' << format_double(row.p) << ','
     << format_double(row.ok ? row.ratio.r_max : nan) << ','
     << format_double(row.ok ? row.ratio.t_wait_opt / t2 : nan) << ','
     << format_double(row.ok ? normalized_sensitivity(row.ghz.s_star, tmpl, t_sample, snr) : nan)
     << ',' << format_double(row.ok ? row.ghz.t_star / t2 : nan) << ','
     << format_double(row.ok ? row.ghz.t_wait_star / t2 : nan) << '\n';
}

void write_optimum(std::ostream& os, const OptimumReport& rep, const SpinSystem& sys,
                   double t_sample, double snr) {
  os << "strategy = " << to_string(rep.strategy) << '\n'
     << "k_spins = " << rep.k_spins << '\n'
     << "p = " << format_double(rep.p) << '\n'
     << "t_star = " << format_double(rep.t_star) << '\n'
     << "t_wait_star = " << format_double(rep.t_wait_star) << '\n'
     << "s_star = " << format_double(rep.s_star) << '\n'
     << "s_star_discrete = " << format_double(rep.s_star_discrete) << '\n'
     << "t_star_over_t2 = " << format_double(rep.t_star / sys.t2_star) << '\n'
     << "t_wait_star_over_t2 = " << format_double(rep.t_wait_star / sys.t2_star) << '\n'
     << "s_star_normalized = "
     << format_double(normalized_sensitivity(rep.s_star, sys, t_sample, snr)) << '\n'
     << "starts_converged = " << rep.starts_converged << '/' << rep.starts << '\n'
     << "starts_agree = " << (rep.starts_agree ? "true" : "false") << '\n';
}

}  // namespace ensmetro
