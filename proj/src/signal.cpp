#include "ensmetro/signal.hpp"

#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ensmetro/errors.hpp"
#include "ensmetro/format.hpp"

namespace ensmetro {

namespace {

// Shared by both strategies so the K=1, T_w=0 quantum trace is bitwise the
// classical one.
SignalTrace damped_oscillation(double amplitude, double log_attenuation, double phase_lever,
                               double delta, double alpha, const AcquisitionGrid& grid,
                               Strategy kind) {
  SignalTrace trace;
  trace.kind = kind;
  trace.times.resize(grid.n_samples);
  trace.values.resize(grid.n_samples);
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    trace.times[m] = t;
    const std::complex<double> exponent(log_attenuation + alpha * t, delta * (phase_lever + t));
    trace.values[m] = amplitude * std::exp(exponent);
  }
  return trace;
}

}  // namespace

SignalTrace ideal_classical(const SignalParams& params, const SpinSystem& sys,
                            const AcquisitionGrid& grid) {
  validate(params);
  validate(sys);
  validate(grid);
  return damped_oscillation(params.amplitude, 0.0, 0.0, params.delta, sys.alpha(), grid,
                            Strategy::Classical);
}

SignalTrace ideal_quantum(const SignalParams& params, const SpinSystem& sys,
                          const AcquisitionGrid& grid) {
  validate(params);
  validate(sys);
  validate(grid);
  const double beta = beta_rate(sys);
  return damped_oscillation(params.amplitude, beta * grid.t_wait, sys.k_spins * grid.t_wait,
                            params.delta, sys.alpha(), grid, Strategy::Quantum);
}

SignalTrace ideal_trace(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                        const AcquisitionGrid& grid) {
  return kind == Strategy::Classical ? ideal_classical(params, sys, grid)
                                     : ideal_quantum(params, sys, grid);
}

SignalTrace add_noise(const SignalTrace& trace, double noise_sigma, std::uint64_t seed) {
  if (trace.is_noisy) throw ValidationError("trace already carries noise");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ValidationError("noise_sigma must be non-negative");
  }
  SignalTrace out = trace;
  out.is_noisy = true;
  if (noise_sigma == 0.0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise_sigma);
  for (Eigen::Index m = 0; m < out.values.size(); ++m) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    out.values[m] += std::complex<double>(re, im);
  }
  return out;
}

void write_trace_csv(std::ostream& os, const SignalTrace& trace) {
  os << "m,t,re,im\n";
  for (Eigen::Index m = 0; m < trace.size(); ++m) {
    os << m << ',' << format_double(trace.times[m]) << ',' << format_double(trace.values[m].real())
       << ',' << format_double(trace.values[m].imag()) << '\n';
  }
  if (!os) throw IoError("failed writing trace CSV");
}

SignalTrace read_trace_csv(std::istream& is, Strategy kind, bool is_noisy) {
  std::string line;
  while (std::getline(is, line) && !line.empty() && line[0] == '#') {
  }
  if (line != "m,t,re,im") throw IoError("trace CSV: unexpected header '" + line + "'");

  std::vector<double> t, re, im;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell[4];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) throw IoError("trace CSV: short row '" + line + "'");
    }
    if (std::stoll(cell[0]) != static_cast<long long>(t.size())) {
      throw IoError("trace CSV: non-consecutive sample index");
    }
    t.push_back(std::stod(cell[1]));
    re.push_back(std::stod(cell[2]));
    im.push_back(std::stod(cell[3]));
  }

  SignalTrace trace;
  trace.kind = kind;
  trace.is_noisy = is_noisy;
  trace.times = Eigen::Map<Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  trace.values.resize(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) trace.values[static_cast<Eigen::Index>(i)] = {re[i], im[i]};
  return trace;
}

}  // namespace ensmetro
