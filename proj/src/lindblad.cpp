#include "ensmetro/lindblad.hpp"

#include <cmath>
#include <string>

#include "ensmetro/errors.hpp"

namespace ensmetro {

namespace {

void check_size(int k_spins, int k_max) {
  if (k_spins < 1) throw ValidationError("k_spins must be >= 1");
  if (k_spins > k_max) {
    throw ValidationError("k_spins = " + std::to_string(k_spins) + " exceeds simulator limit " +
                          std::to_string(k_max));
  }
}

Eigen::Index bit_mask(int k_spins, int spin) { return Eigen::Index{1} << (k_spins - 1 - spin); }

// +1/2 for bit 0, -1/2 for bit 1.
double spin_z(Eigen::Index index, int k_spins, int spin) {
  return (index & bit_mask(k_spins, spin)) ? -0.5 : 0.5;
}

}  // namespace

DensityState ground_state(int k_spins, int k_max) {
  check_size(k_spins, k_max);
  const Eigen::Index dim = Eigen::Index{1} << k_spins;
  DensityState s{k_spins, Eigen::MatrixXcd::Zero(dim, dim)};
  s.matrix(0, 0) = 1.0;
  return s;
}

Eigen::VectorXd hamiltonian_diagonal(const SpinSystem& sys, double delta, int k_max) {
  validate(sys);
  check_size(sys.k_spins, k_max);
  const int k = sys.k_spins;
  const Eigen::Index dim = Eigen::Index{1} << k;
  Eigen::VectorXd e(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double za = spin_z(i, k, 0);
    double energy = sys.gamma_ratio * delta * za;
    for (int j = 1; j < k; ++j) {
      const double zb = spin_z(i, k, j);
      energy += delta * zb + sys.ising_j * za * zb;
    }
    e[i] = energy;
  }
  return e;
}

Eigen::MatrixXcd build_hamiltonian(const SpinSystem& sys, double delta, int k_max) {
  return hamiltonian_diagonal(sys, delta, k_max).cast<std::complex<double>>().asDiagonal();
}

void apply_hadamard(DensityState& state, int spin) {
  const Eigen::Index mask = bit_mask(state.k_spins, spin);
  const double r = 1.0 / std::sqrt(2.0);
  auto& rho = state.matrix;
  for (Eigen::Index i = 0; i < state.dim(); ++i) {
    if (i & mask) continue;
    const Eigen::RowVectorXcd a = rho.row(i);
    const Eigen::RowVectorXcd b = rho.row(i | mask);
    rho.row(i) = r * (a + b);
    rho.row(i | mask) = r * (a - b);
  }
  for (Eigen::Index j = 0; j < state.dim(); ++j) {
    if (j & mask) continue;
    const Eigen::VectorXcd a = rho.col(j);
    const Eigen::VectorXcd b = rho.col(j | mask);
    rho.col(j) = r * (a + b);
    rho.col(j | mask) = r * (a - b);
  }
}

void apply_cnot(DensityState& state, int control, int target) {
  const Eigen::Index cmask = bit_mask(state.k_spins, control);
  const Eigen::Index tmask = bit_mask(state.k_spins, target);
  const Eigen::Index dim = state.dim();
  Eigen::MatrixXcd out(dim, dim);
  auto image = [&](Eigen::Index i) { return (i & cmask) ? (i ^ tmask) : i; };
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) out(image(i), image(j)) = state.matrix(i, j);
  }
  state.matrix = std::move(out);
}

DensityState prepare_ghz(const DensityState& state) {
  DensityState out = state;
  apply_hadamard(out, 0);
  for (int j = 1; j < out.k_spins; ++j) apply_cnot(out, 0, j);
  return out;
}

DensityState disentangle(const DensityState& state) {
  DensityState out = state;
  for (int j = out.k_spins - 1; j >= 1; --j) apply_cnot(out, 0, j);
  return out;
}

DephasingChannel dephasing_channel(const SpinSystem& sys, int k_max) {
  validate(sys);
  check_size(sys.k_spins, k_max);
  const int k = sys.k_spins;
  const Eigen::Index dim = Eigen::Index{1} << k;
  // D[sqrt(kappa) s_z] damps a single-spin coherence at kappa/2.
  const double kappa = 2.0 / sys.t2_star;

  auto single = [&](int spin) {
    Eigen::VectorXd d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d[i] = spin_z(i, k, spin);
    return d;
  };

  const double p = scaling_exponent(sys.decoherence);
  DephasingChannel ch;
  if (p == 0.0) {
    ch.diagonals.push_back(single(0));
    ch.rates.push_back(kappa);
  } else if (p == 1.0) {
    for (int j = 0; j < k; ++j) {
      ch.diagonals.push_back(single(j));
      ch.rates.push_back(kappa);
    }
  } else if (p == 2.0) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
    for (int j = 0; j < k; ++j) total += single(j);
    ch.diagonals.push_back(total);
    ch.rates.push_back(kappa);
  } else {
    throw ValidationError("no microscopic dephasing model for " + to_string(sys.decoherence) +
                          "; the oracle supports p in {0, 1, 2}");
  }
  return ch;
}

Eigen::MatrixXcd liouvillian_rates(const SpinSystem& sys, double delta, int k_max) {
  const Eigen::VectorXd energy = hamiltonian_diagonal(sys, delta, k_max);
  const DephasingChannel ch = dephasing_channel(sys, k_max);
  const Eigen::Index dim = energy.size();
  Eigen::MatrixXcd rates(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      double gamma = 0.0;
      for (std::size_t op = 0; op < ch.rates.size(); ++op) {
        const double diff = ch.diagonals[op][i] - ch.diagonals[op][j];
        gamma += 0.5 * ch.rates[op] * diff * diff;
      }
      rates(i, j) = {gamma, energy[i] - energy[j]};
    }
  }
  return rates;
}

DensityState evolve_dephasing(const DensityState& state, const SpinSystem& sys, double delta,
                              double duration, int k_max) {
  if (!(duration >= 0.0)) throw ValidationError("duration must be non-negative");
  if (sys.k_spins != state.k_spins) throw ValidationError("state and system sizes differ");
  const Eigen::MatrixXcd rates = liouvillian_rates(sys, delta, k_max);
  DensityState out = state;
  out.matrix.array() *= (-rates.array() * duration).exp();
  return out;
}

PhysicalityReport check_physical(const DensityState& state) {
  PhysicalityReport rep;
  const auto& rho = state.matrix;
  rep.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  rep.trace_error = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = eig.eigenvalues().minCoeff();
  return rep;
}

Eigen::MatrixXcd trace_out_central(const DensityState& state) {
  const Eigen::Index half = state.dim() / 2;
  return state.matrix.topLeftCorner(half, half) + state.matrix.bottomRightCorner(half, half);
}

std::complex<double> central_transverse_magnetization(const DensityState& state) {
  // X + iY = 2 |0><1| on spin A, so <X + iY> = 2 sum_s rho_{(1,s),(0,s)}.
  const Eigen::Index half = state.dim() / 2;
  return 2.0 * state.matrix.bottomLeftCorner(half, half).trace();
}

ProtocolResult run_protocol(const SpinSystem& sys, double delta, const AcquisitionGrid& grid,
                            int k_max) {
  validate(sys);
  validate(grid);
  check_size(sys.k_spins, k_max);
  const int k = sys.k_spins;
  const Eigen::Index last = (Eigen::Index{1} << k) - 1;

  const DensityState ghz = prepare_ghz(ground_state(k, k_max));
  const DensityState waited = evolve_dephasing(ghz, sys, delta, grid.t_wait, k_max);

  ProtocolResult res;
  const std::complex<double> coherence = waited.matrix(last, 0);
  res.ghz_phase = std::arg(coherence);
  if (grid.t_wait > 0.0) {
    res.ghz_coherence_decay = std::log(2.0 * std::abs(coherence)) / grid.t_wait;
  } else {
    const DensityState probe = evolve_dephasing(ghz, sys, delta, sys.t2_star, k_max);
    res.ghz_coherence_decay = std::log(2.0 * std::abs(probe.matrix(last, 0))) / sys.t2_star;
  }

  DensityState readout = disentangle(waited);
  Eigen::MatrixXcd reset_target = Eigen::MatrixXcd::Zero(readout.dim() / 2, readout.dim() / 2);
  reset_target(0, 0) = 1.0;
  res.satellite_reset_error = (trace_out_central(readout) - reset_target).cwiseAbs().maxCoeff();

  const Eigen::MatrixXcd rates = liouvillian_rates(sys, delta, k_max);
  const Eigen::ArrayXXcd step = (-rates.array() * grid.t_sample).exp();
  const double ising_shift = 0.5 * (k - 1) * sys.ising_j;

  res.trace.kind = Strategy::Quantum;
  res.trace.times.resize(grid.n_samples);
  res.trace.values.resize(grid.n_samples);
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    if (m > 0) readout.matrix.array() *= step;
    res.trace.times[m] = t;
    res.trace.values[m] = central_transverse_magnetization(readout) *
                          std::exp(std::complex<double>(0.0, -ising_shift * t));
  }
  return res;
}

double fit_ghz_decay_rate(const SpinSystem& sys, double delta, std::span<const double> durations,
                          int k_max) {
  if (durations.size() < 2) throw ValidationError("need at least two durations");
  const Eigen::Index last = (Eigen::Index{1} << sys.k_spins) - 1;
  const DensityState ghz = prepare_ghz(ground_state(sys.k_spins, k_max));
  Eigen::MatrixXd design(durations.size(), 2);
  Eigen::VectorXd logmag(durations.size());
  for (std::size_t n = 0; n < durations.size(); ++n) {
    const DensityState s = evolve_dephasing(ghz, sys, delta, durations[n], k_max);
    design(n, 0) = 1.0;
    design(n, 1) = durations[n];
    logmag[n] = std::log(std::abs(s.matrix(last, 0)));
  }
  return design.colPivHouseholderQr().solve(logmag)[1];
}

ClassicalRun run_classical_branch(const SpinSystem& sys, double delta,
                                  const AcquisitionGrid& grid) {
  validate(grid);
  SpinSystem single = sys;
  single.k_spins = 1;
  single.decoherence = Uncorrelated{};  // every model coincides for one spin
  DensityState rho = ground_state(1);
  apply_hadamard(rho, 0);

  ClassicalRun run;
  run.trace.kind = Strategy::Classical;
  run.trace.times.resize(grid.n_samples);
  run.trace.values.resize(grid.n_samples);
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    const DensityState s = evolve_dephasing(rho, single, delta, t);
    run.states.emplace_back(s.matrix);
    run.trace.times[m] = t;
    run.trace.values[m] = central_transverse_magnetization(s);
  }
  return run;
}

}  // namespace ensmetro
