#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "ensmetro/errors.hpp"
#include "ensmetro/lindblad.hpp"
#include "ensmetro/signal.hpp"

using namespace ensmetro;
using Eigen::MatrixXcd;
using cd = std::complex<double>;
using std::numbers::pi;

namespace {

double wrap(double x) { return std::remainder(x, 2.0 * pi); }

// Dense single-site operator embedded at `spin` (spin 0 is the leftmost factor).
MatrixXcd embed(const Eigen::Matrix2cd& op, int spin, int k) {
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int j = 0; j < k; ++j) {
    const MatrixXcd factor = j == spin ? MatrixXcd(op) : MatrixXcd::Identity(2, 2);
    out = Eigen::kroneckerProduct(out, factor).eval();
  }
  return out;
}

Eigen::Matrix2cd sz() {
  Eigen::Matrix2cd m;
  m << 0.5, 0.0, 0.0, -0.5;
  return m;
}

MatrixXcd dense_hamiltonian(const SpinSystem& sys, double delta) {
  const int k = sys.k_spins;
  MatrixXcd h = sys.gamma_ratio * delta * embed(sz(), 0, k);
  for (int j = 1; j < k; ++j) {
    h += delta * embed(sz(), j, k);
    h += sys.ising_j * embed(sz(), 0, k) * embed(sz(), j, k);
  }
  return h;
}

std::vector<MatrixXcd> dense_jumps(const SpinSystem& sys, const std::string& channel) {
  const int k = sys.k_spins;
  const double amp = std::sqrt(2.0 / sys.t2_star);
  std::vector<MatrixXcd> ops;
  if (channel == "spin_a") {
    ops.push_back(amp * embed(sz(), 0, k));
  } else if (channel == "uncorrelated") {
    for (int j = 0; j < k; ++j) ops.push_back(amp * embed(sz(), j, k));
  } else {
    MatrixXcd total = MatrixXcd::Zero(1 << k, 1 << k);
    for (int j = 0; j < k; ++j) total += embed(sz(), j, k);
    ops.push_back(amp * total);
  }
  return ops;
}

// Column-stacking Lindblad superoperator, exponentiated densely.
MatrixXcd lindblad_evolve(const MatrixXcd& rho, const MatrixXcd& h,
                          const std::vector<MatrixXcd>& jumps, double t) {
  const Eigen::Index d = rho.rows();
  const MatrixXcd id = MatrixXcd::Identity(d, d);
  MatrixXcd super = cd(0, -1) * (Eigen::kroneckerProduct(id, h).eval() -
                                 Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const MatrixXcd& l : jumps) {
    const MatrixXcd ll = l.adjoint() * l;
    super += Eigen::kroneckerProduct(l.conjugate(), l).eval();
    super -= 0.5 * Eigen::kroneckerProduct(id, ll).eval();
    super -= 0.5 * Eigen::kroneckerProduct(ll.transpose(), id).eval();
  }
  const MatrixXcd prop = (super * t).exp();
  const Eigen::VectorXcd v = prop * rho.reshaped();
  return v.reshaped(d, d);
}

MatrixXcd dense_hadamard(int spin, int k) {
  Eigen::Matrix2cd h;
  h << 1.0, 1.0, 1.0, -1.0;
  return embed(h / std::sqrt(2.0), spin, k);
}

MatrixXcd dense_cnot(int control, int target, int k) {
  Eigen::Matrix2cd p0, p1, x;
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  x << 0, 1, 1, 0;
  return embed(p0, control, k) + embed(p1, control, k) * embed(x, target, k);
}

MatrixXcd random_density(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const int d = 1 << k;
  MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cd(n(rng), n(rng));
  MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

SpinSystem with_channel(SpinSystem sys, const std::string& channel) {
  if (channel == "spin_a") sys.decoherence = PowerLaw{0.0};
  else if (channel == "uncorrelated") sys.decoherence = Uncorrelated{};
  else sys.decoherence = Collective{};
  return sys;
}

}  // namespace

TEST_CASE("Hamiltonian examples") {
  const double delta = 0.8;
  SUBCASE("single spin") {
    const SpinSystem sys{.k_spins = 1, .gamma_ratio = 1.3};
    const MatrixXcd h = build_hamiltonian(sys, delta);
    CHECK(h(0, 0).real() == doctest::Approx(1.3 * delta / 2));
    CHECK(h(1, 1).real() == doctest::Approx(-1.3 * delta / 2));
    CHECK(std::abs(h(0, 1)) == 0.0);
  }
  SUBCASE("two spins with coupling") {
    const SpinSystem sys{.k_spins = 2, .ising_j = 0.37};
    CHECK(hamiltonian_diagonal(sys, delta)[0] == doctest::Approx(delta + 0.37 / 4));
  }
  SUBCASE("GHZ branch splitting is independent of J") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 1; k <= 6; ++k) {
      const SpinSystem sys{.k_spins = k, .gamma_ratio = 1.0 + 0.25 * u(rng), .ising_j = u(rng)};
      const Eigen::VectorXd e = hamiltonian_diagonal(sys, delta);
      CHECK(e[0] - e[e.size() - 1] ==
            doctest::Approx((sys.gamma_ratio + k - 1) * delta).epsilon(1e-13));
    }
  }
  SUBCASE("matches the Kronecker-product construction") {
    for (int k = 1; k <= 4; ++k) {
      const SpinSystem sys{.k_spins = k, .gamma_ratio = 0.7, .ising_j = -1.1};
      const MatrixXcd h = build_hamiltonian(sys, delta);
      CHECK((h - dense_hamiltonian(sys, delta)).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("memory guard") {
    CHECK_THROWS_AS(build_hamiltonian(SpinSystem{.k_spins = 11}, delta), ValidationError);
    CHECK_THROWS_AS(ground_state(4, 3), ValidationError);
  }
}

TEST_CASE("gates agree with dense unitaries") {
  std::mt19937_64 rng(9);
  const int k = 3;
  DensityState s{k, random_density(k, rng)};
  for (int spin = 0; spin < k; ++spin) {
    DensityState t = s;
    apply_hadamard(t, spin);
    const MatrixXcd u = dense_hadamard(spin, k);
    CHECK((t.matrix - u * s.matrix * u.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
  }
  for (int c = 0; c < k; ++c) {
    for (int tg = 0; tg < k; ++tg) {
      if (c == tg) continue;
      DensityState t = s;
      apply_cnot(t, c, tg);
      const MatrixXcd u = dense_cnot(c, tg, k);
      CHECK((t.matrix - u * s.matrix * u.adjoint()).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
}

TEST_CASE("GHZ preparation") {
  SUBCASE("one spin gives |+><+|") {
    const DensityState s = prepare_ghz(ground_state(1));
    CHECK((s.matrix - MatrixXcd::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("three spins") {
    const DensityState s = prepare_ghz(ground_state(3));
    for (auto [i, j] : {std::pair{0, 0}, {0, 7}, {7, 0}, {7, 7}})
      CHECK(std::abs(s.matrix(i, j) - 0.5) <= 1e-15);
    CHECK(s.matrix.cwiseAbs().sum() == doctest::Approx(2.0));
    Eigen::VectorXcd ghz = Eigen::VectorXcd::Zero(8);
    ghz[0] = ghz[7] = 1.0 / std::sqrt(2.0);
    CHECK(std::abs((ghz.adjoint() * s.matrix * ghz)(0, 0) - 1.0) <= 1e-14);
  }
  SUBCASE("prepare, disentangle and undo the Hadamard returns to the ground state") {
    for (int k = 1; k <= 6; ++k) {
      DensityState s = disentangle(prepare_ghz(ground_state(k)));
      apply_hadamard(s, 0);
      CHECK((s.matrix - ground_state(k).matrix).cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
}

TEST_CASE("dephased evolution examples") {
  const double delta = 1.7, alpha = -0.6;
  const SpinSystem base{.t2_star = -1.0 / alpha};
  SUBCASE("zero duration is the identity") {
    std::mt19937_64 rng(2);
    SpinSystem sys = base;
    sys.k_spins = 3;
    const DensityState s{3, random_density(3, rng)};
    CHECK((evolve_dephasing(s, sys, delta, 0.0).matrix - s.matrix).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single spin coherence") {
    const DensityState s = prepare_ghz(ground_state(1));
    for (double t : {0.1, 1.0, 3.0}) {
      const DensityState e = evolve_dephasing(s, base, delta, t);
      CHECK(std::abs(e.matrix(0, 1)) == doctest::Approx(0.5 * std::exp(alpha * t)).epsilon(1e-14));
    }
  }
  SUBCASE("three-spin GHZ decays as K alpha or K^2 alpha") {
    const DensityState s = prepare_ghz(ground_state(3));
    const double t = 0.9;
    SpinSystem sys = base;
    sys.k_spins = 3;
    sys.decoherence = Uncorrelated{};
    const DensityState u = evolve_dephasing(s, sys, delta, t);
    CHECK(std::abs(u.matrix(7, 0)) == doctest::Approx(0.5 * std::exp(3 * alpha * t)).epsilon(1e-13));
    CHECK(std::abs(wrap(std::arg(u.matrix(7, 0)) - 3 * delta * t)) <= 1e-12);
    sys.decoherence = Collective{};
    const DensityState c = evolve_dephasing(s, sys, delta, t);
    CHECK(std::abs(c.matrix(7, 0)) == doctest::Approx(0.5 * std::exp(9 * alpha * t)).epsilon(1e-13));
  }
  SUBCASE("fractional exponents have no microscopic model") {
    SpinSystem sys = base;
    sys.k_spins = 3;
    sys.decoherence = PowerLaw{0.5};
    CHECK_THROWS_AS(dephasing_channel(sys), ValidationError);
  }
}

TEST_CASE("per-element evolution equals the dense Lindblad propagator") {
  std::mt19937_64 rng(41);
  for (int k : {1, 2, 3}) {
    for (const std::string channel : {"spin_a", "uncorrelated", "collective"}) {
      const SpinSystem sys =
          with_channel(SpinSystem{.k_spins = k, .gamma_ratio = 1.2, .ising_j = 0.45, .t2_star = 0.7},
                       channel);
      const DensityState s{k, random_density(k, rng)};
      for (double t : {0.05, 0.8}) {
        const MatrixXcd fast = evolve_dephasing(s, sys, 2.1, t).matrix;
        const MatrixXcd dense =
            lindblad_evolve(s.matrix, dense_hamiltonian(sys, 2.1), dense_jumps(sys, channel), t);
        CHECK((fast - dense).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(check_physical(DensityState{k, fast}).ok());
      }
    }
  }
}

TEST_CASE("partial trace and readout") {
  const DensityState s = prepare_ghz(ground_state(1));
  CHECK(std::abs(central_transverse_magnetization(s) - cd(1.0, 0.0)) <= 1e-15);
  const DensityState g = ground_state(3);
  const MatrixXcd reduced = trace_out_central(g);
  CHECK(reduced.rows() == 4);
  CHECK(std::abs(reduced(0, 0) - 1.0) == 0.0);
  CHECK(std::abs(central_transverse_magnetization(g)) == 0.0);
}

TEST_CASE("classical branch reproduces the single-spin density matrix") {
  const double delta = 2.3, alpha = -0.8;
  const SpinSystem sys{.t2_star = -1.0 / alpha};
  const AcquisitionGrid grid{.t_sample = 0.05, .n_samples = 40};
  const ClassicalRun run = run_classical_branch(sys, delta, grid);
  for (int m = 0; m < grid.n_samples; ++m) {
    const double t = grid.time(m);
    Eigen::Matrix2cd expected;
    expected << 1.0, std::exp(cd(alpha * t, delta * t)), std::exp(cd(alpha * t, -delta * t)), 1.0;
    expected *= 0.5;
    // Basis ordering here puts sigma_z = +1/2 first, which transposes the
    // off-diagonal entries relative to the (+1/2 second) textbook layout.
    CHECK((run.states[m] - expected.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const SignalTrace ideal = ideal_classical({.amplitude = 1.0, .delta = delta}, sys, grid);
  CHECK((run.trace.values - ideal.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("full protocol matches the analytic GHZ signal") {
  for (int k = 1; k <= 6; ++k) {
    for (double j : {0.0, 0.3, 2.5}) {
      for (const std::string channel : {"uncorrelated", "collective"}) {
        const SpinSystem sys =
            with_channel(SpinSystem{.k_spins = k, .ising_j = j, .t2_star = 1.0}, channel);
        const AcquisitionGrid grid{.t_sample = 0.01, .n_samples = 100, .t_wait = 0.27};
        const double delta = 1.4;
        const ProtocolResult res = run_protocol(sys, delta, grid);
        const SignalTrace ideal = ideal_quantum({.amplitude = 1.0, .delta = delta}, sys, grid);
        CHECK((res.trace.values - ideal.values).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(res.satellite_reset_error <= 1e-10);
        CHECK(std::abs(wrap(res.ghz_phase - (sys.gamma_ratio + k - 1) * delta * grid.t_wait)) <= 1e-12);
        CHECK(res.ghz_coherence_decay >= std::pow(k, 2) * sys.alpha() - 1e-12);
      }
    }
  }
  SUBCASE("no precession and no coupling gives a real trace") {
    const SpinSystem sys{.k_spins = 4, .t2_star = 1.0, .decoherence = Uncorrelated{}};
    const AcquisitionGrid grid{.t_sample = 0.02, .n_samples = 50, .t_wait = 0.5};
    const ProtocolResult res = run_protocol(sys, 0.0, grid);
    const SignalTrace ideal = ideal_quantum({.amplitude = 1.0, .delta = 0.0}, sys, grid);
    CHECK((res.trace.values - ideal.values).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(res.trace.values.imag().cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("fitted GHZ decay rate certifies beta") {
  const std::vector<double> durations{0.1, 0.25, 0.5, 0.75, 1.0};
  for (int k = 2; k <= 6; ++k) {
    for (const std::string channel : {"uncorrelated", "collective"}) {
      const SpinSystem sys = with_channel(SpinSystem{.k_spins = k, .ising_j = 0.3, .t2_star = 0.9}, channel);
      const double fitted = fit_ghz_decay_rate(sys, 0.9, durations);
      CHECK(fitted == doctest::Approx(beta_rate(sys)).epsilon(1e-9));
    }
  }
  const SpinSystem spin_a{.k_spins = 5, .t2_star = 0.9, .decoherence = PowerLaw{0.0}};
  CHECK(fit_ghz_decay_rate(spin_a, 0.9, durations) == doctest::Approx(spin_a.alpha()).epsilon(1e-9));
}

TEST_CASE("property: physicality is preserved along the protocol") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + static_cast<int>(u(rng) * 5);
    const SpinSystem sys = with_channel(
        SpinSystem{.k_spins = k, .gamma_ratio = 0.5 + u(rng), .ising_j = u(rng), .t2_star = 0.2 + u(rng)},
        u(rng) < 0.5 ? "uncorrelated" : "collective");
    DensityState s = prepare_ghz(ground_state(k));
    REQUIRE(check_physical(s).ok());
    s = evolve_dephasing(s, sys, 3.0 * u(rng), 2.0 * u(rng));
    REQUIRE(check_physical(s).ok());
    s = disentangle(s);
    REQUIRE(check_physical(s).ok());
  }
}
