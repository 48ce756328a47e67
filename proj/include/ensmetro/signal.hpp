#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "ensmetro/domain.hpp"

namespace ensmetro {

/// Sampled FID x_m at times m * t_s.
struct SignalTrace {
  Eigen::VectorXd times;
  Eigen::VectorXcd values;
  Strategy kind = Strategy::Classical;
  bool is_noisy = false;

  Eigen::Index size() const { return values.size(); }
};

/// c' exp((i delta + alpha) m t_s).
SignalTrace ideal_classical(const SignalParams& params, const SpinSystem& sys,
                            const AcquisitionGrid& grid);

/// c exp(i K delta T_w + beta T_w) exp((i delta + alpha) m t_s).
SignalTrace ideal_quantum(const SignalParams& params, const SpinSystem& sys,
                          const AcquisitionGrid& grid);

SignalTrace ideal_trace(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                        const AcquisitionGrid& grid);

/// Adds circular complex Gaussian noise, sigma per quadrature. Deterministic in seed.
SignalTrace add_noise(const SignalTrace& trace, double noise_sigma, std::uint64_t seed);

/// CSV with header `m,t,re,im`.
void write_trace_csv(std::ostream& os, const SignalTrace& trace);
SignalTrace read_trace_csv(std::istream& is, Strategy kind, bool is_noisy);

}  // namespace ensmetro
