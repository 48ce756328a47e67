#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ensmetro/domain.hpp"
#include "ensmetro/signal.hpp"

namespace ensmetro {

inline constexpr int kDefaultMaxSpins = 10;

/// Density matrix of one molecule. Spin A is the first tensor factor (most
/// significant bit of the basis index); bit value 0 is sigma_z = +1/2.
struct DensityState {
  int k_spins = 1;
  Eigen::MatrixXcd matrix;

  Eigen::Index dim() const { return matrix.rows(); }
};

/// |0 0...0><0 0...0|.
DensityState ground_state(int k_spins, int k_max = kDefaultMaxSpins);

/// Diagonal of H_K = gamma delta s_z^A + delta sum s_z^B + J sum s_z^A s_z^B
/// (s_z eigenvalues +-1/2) in the computational basis.
Eigen::VectorXd hamiltonian_diagonal(const SpinSystem& sys, double delta,
                                     int k_max = kDefaultMaxSpins);
Eigen::MatrixXcd build_hamiltonian(const SpinSystem& sys, double delta,
                                   int k_max = kDefaultMaxSpins);

void apply_hadamard(DensityState& state, int spin);
void apply_cnot(DensityState& state, int control, int target);

/// Hadamard on A, then CNOT from A onto every satellite.
DensityState prepare_ghz(const DensityState& state);
/// CNOT fan-out only: maps the GHZ phase back onto the central spin.
DensityState disentangle(const DensityState& state);

/// Jump operators L_k = sqrt(rate_k) diag(eigs_k), all diagonal.
struct DephasingChannel {
  std::vector<Eigen::VectorXd> diagonals;
  std::vector<double> rates;
};

/// Microscopic channel for sys.decoherence, calibrated so one spin decays as
/// e^{alpha t}. PowerLaw(0) acts on spin A only; PowerLaw(1) and PowerLaw(2)
/// are Uncorrelated and Collective. Other exponents have no Lindbladian.
DephasingChannel dephasing_channel(const SpinSystem& sys, int k_max = kDefaultMaxSpins);

/// Per-element generator: rho_ij(t) = rho_ij(0) exp(-rates_ij t), with
/// rates_ij = Gamma_ij + i (E_i - E_j).
Eigen::MatrixXcd liouvillian_rates(const SpinSystem& sys, double delta,
                                   int k_max = kDefaultMaxSpins);

DensityState evolve_dephasing(const DensityState& state, const SpinSystem& sys, double delta,
                              double duration, int k_max = kDefaultMaxSpins);

struct PhysicalityReport {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;

  bool ok() const {
    return hermiticity_error <= 1e-12 && trace_error <= 1e-12 && min_eigenvalue >= -1e-10;
  }
};
PhysicalityReport check_physical(const DensityState& state);

/// Reduced state of the satellite register.
Eigen::MatrixXcd trace_out_central(const DensityState& state);

/// <X + iY> of the central spin (Pauli X, Y).
std::complex<double> central_transverse_magnetization(const DensityState& state);

struct ProtocolResult {
  SignalTrace trace;
  double ghz_coherence_decay = 0.0;  // fitted beta, rad/s (<= 0)
  double ghz_phase = 0.0;            // arg of the GHZ coherence after T_w
  double satellite_reset_error = 0.0;
};

/// rho0 -> GHZ -> dephased wait T_w -> disentangle -> sampled readout of the
/// central spin, demodulated by the Ising shift (K-1) J / 2.
ProtocolResult run_protocol(const SpinSystem& sys, double delta, const AcquisitionGrid& grid,
                            int k_max = kDefaultMaxSpins);

/// Least-squares rate of ln|GHZ coherence| over the given wait durations.
double fit_ghz_decay_rate(const SpinSystem& sys, double delta, std::span<const double> durations,
                          int k_max = kDefaultMaxSpins);

/// Classical branch: a single uncoupled spin, Hadamard, free dephased precession.
struct ClassicalRun {
  std::vector<Eigen::Matrix2cd> states;
  SignalTrace trace;
};
ClassicalRun run_classical_branch(const SpinSystem& sys, double delta,
                                  const AcquisitionGrid& grid);

}  // namespace ensmetro
