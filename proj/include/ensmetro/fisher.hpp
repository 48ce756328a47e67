#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "ensmetro/domain.hpp"

namespace ensmetro {

/// Parameter order used by every Fisher matrix and Jacobian: (c, alpha, delta).
enum ParamIndex : Eigen::Index { kAmplitude = 0, kAlpha = 1, kDelta = 2 };

using Jacobian = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 3>;

/// Fisher information over (c, alpha, delta) for one strategy.
///
/// The GHZ attenuation e^{beta T_w} is a known constant of the model. It is
/// factored out before inversion and kept in log form, so CRBs that overflow
/// a double still have a finite `log_crb_delta`.
struct FisherReport {
  Eigen::Matrix3d matrix;
  Eigen::Matrix3d inverse;
  double crb_c = 0.0;
  double crb_alpha = 0.0;
  double crb_delta = 0.0;
  double log_crb_delta = 0.0;
  double log_attenuation = 0.0;  // beta T_w for Quantum, 0 for Classical
};

/// Analytic D_{m,j} = d xhat_m / d p_j, without the e^{beta T_w} factor.
Jacobian unattenuated_jacobian(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                               const AcquisitionGrid& grid);

/// Full Jacobian of the ideal signal, attenuation included.
Jacobian signal_jacobian(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                         const AcquisitionGrid& grid);

/// F = Re(D^H D) / sigma^2 and its inverse. Throws SingularFisherError when
/// the matrix cannot be inverted reliably.
FisherReport fisher_matrix(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                           const AcquisitionGrid& grid);

/// Closed-form CRB on delta for the GHZ strategy.
double crb_delta_ghz_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr);
double log_crb_delta_ghz_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr);

/// Closed-form CRB on delta for uncoupled spins; the ensemble SQL.
double crb_delta_std_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr);
double log_crb_delta_std_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr);

/// CRB_STD / CRB_GHZ from the discrete sums (same SNR for both).
double discrete_crb_ratio(const SpinSystem& sys, const AcquisitionGrid& grid);

/// Integral approximation of CRB_STD / CRB_GHZ:
/// e^{beta T_w} sqrt(1 - 2 K alpha T_w (1 - K alpha T_w)).
double ratio_r_infinity(const SpinSystem& sys, double t_wait);
/// ln of ratio_r_infinity, accurate near T_w = 0.
double log_ratio_r_infinity(const SpinSystem& sys, double t_wait);

struct RatioOptimum {
  double r_max = 1.0;
  double t_wait_opt = 0.0;  // s
};

/// Analytic maximum of ratio_r_infinity over T_w for beta = k^p alpha, p < 1.
RatioOptimum max_r_infinity_closed(int k, double p, double t2_star = 1.0);

/// Same, but returns (1, 0) for p >= 1 or k == 1 where the supremum sits at T_w = 0.
RatioOptimum best_r_infinity(int k, double p, double t2_star = 1.0);

/// `K,p,Tw_opt,R_max` rows; Tw_opt in units of T2*.
void write_ratio_csv_header(std::ostream& os);
void write_ratio_csv_row(std::ostream& os, int k, double p, const RatioOptimum& opt,
                         double t2_star);

}  // namespace ensmetro
