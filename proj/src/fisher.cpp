#include "ensmetro/fisher.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ensmetro/errors.hpp"
#include "ensmetro/format.hpp"

namespace ensmetro {

namespace {

double phase_lever(Strategy kind, const SpinSystem& sys, const AcquisitionGrid& grid) {
  return kind == Strategy::Quantum ? sys.k_spins * grid.t_wait : 0.0;
}

double log_attenuation(Strategy kind, const SpinSystem& sys, const AcquisitionGrid& grid) {
  return kind == Strategy::Quantum ? beta_rate(sys) * grid.t_wait : 0.0;
}

// sum_m (lever + m t_s)^2 exp(2 alpha m t_s)
double lever_weighted_energy(double lever, double alpha, const AcquisitionGrid& grid) {
  double sum = 0.0;
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    const double u = lever + t;
    sum += u * u * std::exp(2.0 * alpha * t);
  }
  return sum;
}

void check_snr(double snr) {
  if (!(snr > 0.0) || std::isnan(snr)) throw ValidationError("snr must be positive");
}

}  // namespace

Jacobian unattenuated_jacobian(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                               const AcquisitionGrid& grid) {
  validate(params);
  validate(sys);
  validate(grid);
  const double lever = phase_lever(kind, sys, grid);
  const double alpha = sys.alpha();
  const std::complex<double> i(0.0, 1.0);

  Jacobian d(grid.n_samples, 3);
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    const std::complex<double> x =
        params.amplitude * std::exp(std::complex<double>(alpha * t, params.delta * (lever + t)));
    d(m, kAmplitude) = x / params.amplitude;
    d(m, kAlpha) = t * x;
    d(m, kDelta) = i * (lever + t) * x;
  }
  return d;
}

Jacobian signal_jacobian(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                         const AcquisitionGrid& grid) {
  return unattenuated_jacobian(kind, params, sys, grid) *
         std::exp(log_attenuation(kind, sys, grid));
}

FisherReport fisher_matrix(Strategy kind, const SignalParams& params, const SpinSystem& sys,
                           const AcquisitionGrid& grid) {
  if (!(params.noise_sigma > 0.0)) throw ValidationError("Fisher matrix needs noise_sigma > 0");
  const Jacobian d = unattenuated_jacobian(kind, params, sys, grid);
  const double var = params.noise_sigma * params.noise_sigma;
  const Eigen::Matrix3d reduced = (d.adjoint() * d).real() / var;

  // Symmetric diagonal equilibration; the three parameters live on very
  // different scales.
  const Eigen::Vector3d diag = reduced.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw SingularFisherError("Fisher matrix has a non-positive diagonal entry");
  }
  const Eigen::Vector3d scale = diag.cwiseSqrt().cwiseInverse();
  const Eigen::Matrix3d unit = scale.asDiagonal() * reduced * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(unit, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-13 * hi)) {
    throw SingularFisherError("Fisher matrix is singular for this acquisition grid");
  }
  Eigen::LLT<Eigen::Matrix3d> llt(unit);
  if (llt.info() != Eigen::Success) throw SingularFisherError("Fisher matrix is not positive definite");
  const Eigen::Matrix3d unit_inv = llt.solve(Eigen::Matrix3d::Identity());
  const Eigen::Matrix3d reduced_inv = scale.asDiagonal() * unit_inv * scale.asDiagonal();

  FisherReport rep;
  rep.log_attenuation = log_attenuation(kind, sys, grid);
  const double gain = std::exp(2.0 * rep.log_attenuation);
  rep.matrix = reduced * gain;
  rep.inverse = reduced_inv / gain;
  const double amp = std::exp(-rep.log_attenuation);
  rep.crb_c = amp * std::sqrt(reduced_inv(kAmplitude, kAmplitude));
  rep.crb_alpha = amp * std::sqrt(reduced_inv(kAlpha, kAlpha));
  rep.crb_delta = amp * std::sqrt(reduced_inv(kDelta, kDelta));
  rep.log_crb_delta = -rep.log_attenuation + 0.5 * std::log(reduced_inv(kDelta, kDelta));
  return rep;
}

double log_crb_delta_ghz_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr) {
  validate(sys);
  validate(grid);
  check_snr(snr);
  const double sum = lever_weighted_energy(sys.k_spins * grid.t_wait, sys.alpha(), grid);
  return -beta_rate(sys) * grid.t_wait - 0.5 * std::log(sum) - std::log(snr);
}

double crb_delta_ghz_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr) {
  validate(sys);
  validate(grid);
  check_snr(snr);
  const double sum = lever_weighted_energy(sys.k_spins * grid.t_wait, sys.alpha(), grid);
  const double attenuation = std::exp(-beta_rate(sys) * grid.t_wait);
  const double crb = attenuation / std::sqrt(sum) / snr;
  if (std::isfinite(crb)) return crb;
  return std::exp(log_crb_delta_ghz_closed(sys, grid, snr));
}

double log_crb_delta_std_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr) {
  validate(sys);
  validate(grid);
  check_snr(snr);
  return -0.5 * std::log(lever_weighted_energy(0.0, sys.alpha(), grid)) - std::log(snr);
}

double crb_delta_std_closed(const SpinSystem& sys, const AcquisitionGrid& grid, double snr) {
  validate(sys);
  validate(grid);
  check_snr(snr);
  return 1.0 / std::sqrt(lever_weighted_energy(0.0, sys.alpha(), grid)) / snr;
}

double discrete_crb_ratio(const SpinSystem& sys, const AcquisitionGrid& grid) {
  return std::exp(log_crb_delta_std_closed(sys, grid, 1.0) -
                  log_crb_delta_ghz_closed(sys, grid, 1.0));
}

double ratio_r_infinity(const SpinSystem& sys, double t_wait) {
  validate(sys);
  if (!(t_wait >= 0.0)) throw ValidationError("t_wait must be non-negative");
  const double x = sys.k_spins * sys.alpha() * t_wait;  // K alpha T_w <= 0
  return std::exp(beta_rate(sys) * t_wait) * std::sqrt(1.0 - 2.0 * x * (1.0 - x));
}

double log_ratio_r_infinity(const SpinSystem& sys, double t_wait) {
  validate(sys);
  if (!(t_wait >= 0.0)) throw ValidationError("t_wait must be non-negative");
  const double x = sys.k_spins * sys.alpha() * t_wait;
  return beta_rate(sys) * t_wait + 0.5 * std::log1p(-2.0 * x * (1.0 - x));
}

RatioOptimum max_r_infinity_closed(int k, double p, double t2_star) {
  if (k < 2) throw ValidationError("closed-form optimum needs k >= 2");
  if (!(p >= 0.0)) throw ValidationError("p must be >= 0");
  if (p >= 1.0) throw ValidationError("closed-form optimum only exists for p < 1");
  if (!(t2_star > 0.0)) throw ValidationError("t2_star must be positive");

  const double log_k = std::log(static_cast<double>(k));
  const double one_minus_q = -std::expm1((p - 1.0) * log_k);       // 1 - K^{p-1}
  const double root = std::sqrt(-std::expm1(2.0 * (p - 1.0) * log_k));  // sqrt(1 - K^{2p-2})

  RatioOptimum opt;
  // K^{1/2-p} sqrt(K + sqrt(K^2 - K^{2p})) = K^{1-p} sqrt(1 + root)
  opt.r_max = std::exp((1.0 - p) * log_k) * std::sqrt(1.0 + root) /
              std::exp(0.5 * (one_minus_q + root));
  opt.t_wait_opt = (one_minus_q + root) / (2.0 * std::exp(p * log_k)) * t2_star;
  return opt;
}

RatioOptimum best_r_infinity(int k, double p, double t2_star) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (k == 1 || p >= 1.0) return RatioOptimum{1.0, 0.0};
  return max_r_infinity_closed(k, p, t2_star);
}

void write_ratio_csv_header(std::ostream& os) { os << "K,p,Tw_opt,R_max\n"; }

void write_ratio_csv_row(std::ostream& os, int k, double p, const RatioOptimum& opt,
                         double t2_star) {
  os << k << ',' << format_double(p) << ',' << format_double(opt.t_wait_opt / t2_star) << ','
     << format_double(opt.r_max) << '\n';
}

}  // namespace ensmetro
