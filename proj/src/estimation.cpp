#include "ensmetro/estimation.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "ensmetro/errors.hpp"
#include "ensmetro/fisher.hpp"
#include "ensmetro/format.hpp"
#include "ensmetro/parallel.hpp"

namespace ensmetro {

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged:
      return "converged";
    case FitStatus::NotConverged:
      return "not_converged";
    case FitStatus::PhaseAmbiguous:
      return "phase_ambiguous";
  }
  return "unknown";
}

namespace {

using std::numbers::pi;

struct FidModel {
  Eigen::VectorXd times;
  double lever = 0.0;            // K T_w for Quantum
  double log_attenuation = 0.0;  // beta T_w for Quantum

  double phase_span() const { return lever + times[times.size() - 1]; }

  Eigen::VectorXcd evaluate(const Eigen::Vector3d& theta) const {
    Eigen::VectorXcd x(times.size());
    for (Eigen::Index m = 0; m < times.size(); ++m) {
      const double t = times[m];
      x[m] = theta[kAmplitude] *
             std::exp(std::complex<double>(log_attenuation + theta[kAlpha] * t,
                                           theta[kDelta] * (lever + t)));
    }
    return x;
  }

  Jacobian jacobian(const Eigen::Vector3d& theta, const Eigen::VectorXcd& x) const {
    Jacobian d(times.size(), 3);
    const std::complex<double> i(0.0, 1.0);
    for (Eigen::Index m = 0; m < times.size(); ++m) {
      d(m, kAmplitude) = x[m] / theta[kAmplitude];
      d(m, kAlpha) = times[m] * x[m];
      d(m, kDelta) = i * (lever + times[m]) * x[m];
    }
    return d;
  }
};

FidModel make_model(const SignalTrace& trace, Strategy kind, const SpinSystem& sys,
                    const AcquisitionGrid& grid) {
  validate(sys);
  validate(grid);
  if (trace.size() != grid.n_samples || trace.times.size() != trace.values.size()) {
    throw ValidationError("trace length does not match the acquisition grid");
  }
  FidModel model;
  model.times = trace.times;
  if (kind == Strategy::Quantum) {
    model.lever = sys.k_spins * grid.t_wait;
    model.log_attenuation = beta_rate(sys) * grid.t_wait;
  }
  return model;
}

double wrap_phase(double x) { return std::remainder(x, 2.0 * pi); }

double periodogram_peak(const Eigen::VectorXcd& x, double t_sample) {
  const Eigen::Index m = x.size();
  const Eigen::Index n = 4 * m;
  double best_power = -1.0;
  double best_omega = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double omega = -pi / t_sample + 2.0 * pi * static_cast<double>(j) /
                                              (static_cast<double>(n) * t_sample);
    const std::complex<double> z = std::polar(1.0, -omega * t_sample);
    // Horner: sum_m x_m z^m, evaluated from the tail.
    std::complex<double> acc = 0.0;
    for (Eigen::Index k = m - 1; k >= 0; --k) acc = acc * z + x[k];
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_omega = omega;
    }
  }
  return best_omega;
}

}  // namespace

bool in_identifiability_window(double delta, Strategy kind, const SpinSystem& sys,
                               const AcquisitionGrid& grid) {
  const double lever = kind == Strategy::Quantum ? sys.k_spins * grid.t_wait : 0.0;
  return std::abs(delta) * (lever + grid.readout_length()) < pi;
}

EstimateResult initial_estimate(const SignalTrace& trace, Strategy kind, const SpinSystem& sys,
                                const AcquisitionGrid& grid) {
  const FidModel model = make_model(trace, kind, sys, grid);
  const Eigen::VectorXcd& x = trace.values;
  const Eigen::Index m = x.size();
  const Eigen::ArrayXd weight = x.cwiseAbs2().array();

  // Frequency: periodogram peak, then readout-slope regression unwrapped
  // around it, then a through-origin fit on the full phase lever.
  const double omega = periodogram_peak(x, grid.t_sample);
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd phase(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double t = model.times[k];
    design(k, 0) = 1.0;
    design(k, 1) = t;
    phase[k] = omega * t + wrap_phase(std::arg(x[k]) - std::arg(x[0]) - omega * t);
  }
  const Eigen::VectorXd sw = weight.sqrt().matrix();
  const Eigen::Vector2d slope_fit =
      (sw.asDiagonal() * design).colPivHouseholderQr().solve(sw.asDiagonal() * phase);
  const double slope = slope_fit[1];

  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double u = model.lever + model.times[k];
    const double phi = slope * u + wrap_phase(std::arg(x[k]) - slope * u);
    num += weight[k] * u * phi;
    den += weight[k] * u * u;
  }

  EstimateResult init;
  init.delta_hat = den > 0.0 ? num / den : slope;

  // Decay: weighted regression of log-magnitude on time.
  Eigen::VectorXd logmag(m);
  Eigen::VectorXd w2 = sw;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (weight[k] > 0.0) {
      logmag[k] = 0.5 * std::log(weight[k]);
    } else {
      logmag[k] = 0.0;
      w2[k] = 0.0;
    }
  }
  const Eigen::Vector2d decay_fit =
      (w2.asDiagonal() * design).colPivHouseholderQr().solve(w2.asDiagonal() * logmag);
  init.alpha_hat = decay_fit[1];
  if (!(init.alpha_hat < 0.0)) init.alpha_hat = -1.0 / model.phase_span();

  const double attenuation = std::exp(model.log_attenuation);
  const double x0 = std::abs(x[0]);
  init.c_hat = (x0 > 0.0 ? x0 : std::exp(decay_fit[0])) / attenuation;
  return init;
}

EstimateResult fit_fid(const SignalTrace& trace, Strategy kind, const SpinSystem& sys,
                       const AcquisitionGrid& grid, const std::optional<EstimateResult>& init,
                       const FitOptions& options) {
  const FidModel model = make_model(trace, kind, sys, grid);
  const EstimateResult start = init ? *init : initial_estimate(trace, kind, sys, grid);
  if (!(start.c_hat > 0.0) || !std::isfinite(start.alpha_hat) || !std::isfinite(start.delta_hat)) {
    throw ValidationError("fit initialisation must have c > 0 and finite rates");
  }

  Eigen::Vector3d theta(start.c_hat, start.alpha_hat, start.delta_hat);
  const double inv_span = 1.0 / model.phase_span();
  auto scales = [&](const Eigen::Vector3d& th) {
    return Eigen::Vector3d(std::abs(th[kAmplitude]), std::abs(th[kAlpha]) + inv_span,
                           std::abs(th[kDelta]) + inv_span);
  };

  Eigen::VectorXcd fitted = model.evaluate(theta);
  Eigen::VectorXcd residual = trace.values - fitted;
  double cost = residual.squaredNorm();
  double lambda = 1e-3;

  EstimateResult res;
  bool converged = cost == 0.0;
  int iter = 0;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    const Jacobian jac = model.jacobian(theta, fitted);
    const Eigen::Matrix3d normal = (jac.adjoint() * jac).real();
    const Eigen::Vector3d gradient = (jac.adjoint() * residual).real();

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d damped = normal;
      damped.diagonal() *= 1.0 + lambda;
      const Eigen::Vector3d step = damped.ldlt().solve(gradient);
      const Eigen::Vector3d trial = theta + step;
      if (!step.allFinite() || !(trial[kAmplitude] > 0.0)) {
        lambda *= 4.0;
      } else {
        const Eigen::VectorXcd trial_fit = model.evaluate(trial);
        const Eigen::VectorXcd trial_res = trace.values - trial_fit;
        const double trial_cost = trial_res.squaredNorm();
        if (trial_cost <= cost) {
          const bool small =
              (step.cwiseAbs().array() <= options.relative_tolerance * scales(trial).array()).all();
          theta = trial;
          fitted = trial_fit;
          residual = trial_res;
          cost = trial_cost;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          converged = small || cost == 0.0;
        } else {
          lambda *= 4.0;
        }
      }
      if (!accepted && lambda > 1e16) {
        // No descent direction left at machine precision: already at the minimum.
        converged = true;
        break;
      }
    }
  }

  res.c_hat = theta[kAmplitude];
  res.alpha_hat = theta[kAlpha];
  res.delta_hat = theta[kDelta];
  res.residual_norm = std::sqrt(cost);
  res.iterations = iter;
  res.converged = converged && theta.allFinite() && res.c_hat > 0.0 && std::isfinite(cost);
  res.status = res.converged ? FitStatus::Converged : FitStatus::NotConverged;
  if (res.converged && !in_identifiability_window(res.delta_hat, kind, sys, grid)) {
    res.status = FitStatus::PhaseAmbiguous;
  }
  return res;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MonteCarloReport monte_carlo(Strategy kind, const SpinSystem& sys, const AcquisitionGrid& grid,
                             const SignalParams& params, int n_trials, std::uint64_t seed,
                             int jobs) {
  if (n_trials < 100) throw ValidationError("monte_carlo needs n_trials >= 100");
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
  if (!in_identifiability_window(params.delta, kind, sys, grid)) {
    throw ValidationError("true delta lies outside the identifiability window");
  }
  const SignalTrace ideal = ideal_trace(kind, params, sys, grid);

  std::vector<double> estimates(static_cast<std::size_t>(n_trials), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(n_trials), 0);
  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const SignalTrace noisy =
          add_noise(ideal, params.noise_sigma, trial_seed(seed, static_cast<std::uint64_t>(i)));
      const EstimateResult fit = fit_fid(noisy, kind, sys, grid);
      ok[static_cast<std::size_t>(i)] = fit.status == FitStatus::Converged;
      estimates[static_cast<std::size_t>(i)] = fit.delta_hat;
    }
  };
  parallel_ranges(n_trials, jobs, run_range);

  MonteCarloReport rep;
  rep.strategy = kind;
  rep.n_trials = n_trials;
  double sum = 0.0;
  int good = 0;
  for (int i = 0; i < n_trials; ++i) {
    if (ok[static_cast<std::size_t>(i)]) {
      sum += estimates[static_cast<std::size_t>(i)];
      ++good;
    } else {
      ++rep.failure_count;
    }
  }
  rep.delta_mean_empirical = good > 0 ? sum / good : std::nan("");
  double ss = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    if (!ok[static_cast<std::size_t>(i)]) continue;
    const double d = estimates[static_cast<std::size_t>(i)] - rep.delta_mean_empirical;
    ss += d * d;
  }
  rep.delta_std_empirical = good > 1 ? std::sqrt(ss / (good - 1)) : std::nan("");

  if (params.noise_sigma > 0.0) {
    rep.crb_delta = kind == Strategy::Classical
                        ? crb_delta_std_closed(sys, grid, params.snr())
                        : crb_delta_ghz_closed(sys, grid, params.snr());
    rep.efficiency = rep.delta_std_empirical / rep.crb_delta;
  } else {
    rep.crb_delta = 0.0;
    rep.efficiency = std::nan("");
  }
  rep.valid = rep.failure_count * 20 <= n_trials;
  return rep;
}

void write_report(std::ostream& os, const MonteCarloReport& rep) {
  os << "strategy = " << to_string(rep.strategy) << '\n'
     << "n_trials = " << rep.n_trials << '\n'
     << "delta_mean_empirical = " << format_double(rep.delta_mean_empirical) << '\n'
     << "delta_std_empirical = " << format_double(rep.delta_std_empirical) << '\n'
     << "crb_delta = " << format_double(rep.crb_delta) << '\n'
     << "efficiency = " << format_double(rep.efficiency) << '\n'
     << "failure_count = " << rep.failure_count << '\n'
     << "valid = " << (rep.valid ? "true" : "false") << '\n';
}

}  // namespace ensmetro
