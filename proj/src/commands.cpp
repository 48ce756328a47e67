#include "ensmetro/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ensmetro/errors.hpp"
#include "ensmetro/estimation.hpp"
#include "ensmetro/fisher.hpp"
#include "ensmetro/format.hpp"
#include "ensmetro/lindblad.hpp"
#include "ensmetro/optimization.hpp"
#include "ensmetro/parallel.hpp"
#include "ensmetro/signal.hpp"

namespace ensmetro {

namespace fs = std::filesystem;

namespace {

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  return fs::path(cfg.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string kv(const std::string& key, double v) { return key + " = " + format_double(v) + "\n"; }

}  // namespace

int cmd_signal(const RunConfig& cfg, std::ostream& log) {
  const std::string header = cfg.provenance();
  const std::pair<Strategy, std::uint64_t> runs[] = {{Strategy::Classical, trial_seed(cfg.seed, 0)},
                                                     {Strategy::Quantum, trial_seed(cfg.seed, 1)}};
  for (const auto& [kind, seed] : runs) {
    const SignalTrace ideal = ideal_trace(kind, cfg.signal, cfg.system, cfg.grid);
    const SignalTrace noisy = add_noise(ideal, cfg.signal.noise_sigma, seed);
    for (const auto* trace : {&ideal, &noisy}) {
      std::ostringstream os;
      os << header;
      write_trace_csv(os, *trace);
      const std::string name = to_string(kind) + (trace->is_noisy ? "_noisy.csv" : "_ideal.csv");
      write_file(output_path(cfg, name), os.str());
      log << "wrote " << (fs::path(cfg.out_dir) / name).string() << " (" << trace->size()
          << " samples)\n";
    }
  }
  return kSuccess;
}

int cmd_crb(const RunConfig& cfg, std::ostream& log) {
  if (!(cfg.signal.noise_sigma > 0.0)) throw ValidationError("crb needs signal.noise_sigma > 0");
  const double snr = cfg.signal.snr();
  const FisherReport fc = fisher_matrix(Strategy::Classical, cfg.signal, cfg.system, cfg.grid);
  const FisherReport fq = fisher_matrix(Strategy::Quantum, cfg.signal, cfg.system, cfg.grid);
  const double std_closed = crb_delta_std_closed(cfg.system, cfg.grid, snr);
  const double ghz_closed = crb_delta_ghz_closed(cfg.system, cfg.grid, snr);
  const double log_std = log_crb_delta_std_closed(cfg.system, cfg.grid, snr);
  const double log_ghz = log_crb_delta_ghz_closed(cfg.system, cfg.grid, snr);
  const double r_inf = ratio_r_infinity(cfg.system, cfg.grid.t_wait);
  const double p = scaling_exponent(cfg.system.decoherence);
  const RatioOptimum best = best_r_infinity(cfg.system.k_spins, p, cfg.system.t2_star);

  const double dev_std = std::abs(fc.log_crb_delta - log_std);
  const double dev_ghz = std::abs(fq.log_crb_delta - log_ghz);
  const bool agree = dev_std <= 1e-10 && dev_ghz <= 1e-10;

  std::string verdict;
  if (r_inf > 1.0) {
    verdict = "quantum strategy advantageous";
  } else if (cfg.grid.t_wait > 0.0) {
    verdict = "quantum strategy not advantageous";
  } else {
    verdict = "strategies coincide";
  }

  std::ostringstream os;
  os << cfg.provenance() << kv("snr", snr) << kv("t_wait", cfg.grid.t_wait)
     << kv("beta", beta_rate(cfg.system)) << kv("crb_delta_std_closed", std_closed)
     << kv("crb_delta_std_fisher", fc.crb_delta) << kv("crb_c_std_fisher", fc.crb_c)
     << kv("crb_alpha_std_fisher", fc.crb_alpha) << kv("crb_delta_ghz_closed", ghz_closed)
     << kv("crb_delta_ghz_fisher", fq.crb_delta) << kv("crb_c_ghz_fisher", fq.crb_c)
     << kv("crb_alpha_ghz_fisher", fq.crb_alpha)
     << kv("closed_vs_fisher_log_deviation", std::max(dev_std, dev_ghz))
     << kv("r_infinity", r_inf) << kv("discrete_ratio", discrete_crb_ratio(cfg.system, cfg.grid))
     << kv("r_max", best.r_max) << kv("t_wait_opt", best.t_wait_opt)
     << "verdict = " << verdict << '\n';
  write_file(output_path(cfg, "crb_report.txt"), os.str());

  log << "CRB_delta STD: closed " << format_double(std_closed) << ", Fisher "
      << format_double(fc.crb_delta) << '\n'
      << "CRB_delta GHZ: closed " << format_double(ghz_closed) << ", Fisher "
      << format_double(fq.crb_delta) << '\n'
      << "R_inf(T_w = " << format_double(cfg.grid.t_wait) << ") = " << format_double(r_inf)
      << " -> " << verdict << '\n';
  if (!agree) {
    log << "closed form and Fisher inversion disagree beyond 1e-10\n";
    return kNumericalFailure;
  }
  return kSuccess;
}

int cmd_oracle_check(const RunConfig& cfg, std::ostream& log) {
  for (int k : cfg.oracle_k) {
    if (k < 1 || k > cfg.k_max) {
      throw ValidationError("oracle K = " + std::to_string(k) + " outside [1, k_max = " +
                            std::to_string(cfg.k_max) + "]");
    }
  }
  const double t2 = cfg.system.t2_star;
  const double delta = cfg.signal.delta;
  const std::vector<double> durations = {0.1 * t2, 0.25 * t2, 0.5 * t2, 1.0 * t2};

  std::ostringstream os;
  os << cfg.provenance();
  bool all_pass = true;

  // Classical branch: off-diagonals of the single-spin state vs the analytic form.
  {
    const ClassicalRun run = run_classical_branch(cfg.system, delta, cfg.grid);
    double dev = 0.0;
    for (std::size_t m = 0; m < run.states.size(); ++m) {
      const double t = run.trace.times[static_cast<Eigen::Index>(m)];
      const std::complex<double> coh =
          0.5 * std::exp(std::complex<double>(cfg.system.alpha() * t, delta * t));
      Eigen::Matrix2cd expected;
      expected << 0.5, std::conj(coh), coh, 0.5;
      dev = std::max(dev, (run.states[m] - expected).cwiseAbs().maxCoeff());
    }
    const SignalTrace ref = ideal_classical({1.0, 0.0, delta}, cfg.system, cfg.grid);
    dev = std::max(dev, (run.trace.values - ref.values).cwiseAbs().maxCoeff());
    const bool pass = dev <= 1e-12;
    all_pass = all_pass && pass;
    os << "classical max_deviation=" << format_double(dev) << ' ' << (pass ? "PASS" : "FAIL")
       << '\n';
  }

  for (int k : cfg.oracle_k) {
    for (double j_units : cfg.oracle_j) {
      for (const auto& channel : cfg.oracle_channels) {
        SpinSystem micro = cfg.system;
        micro.k_spins = k;
        micro.ising_j = j_units / t2;
        micro.decoherence = channel == "uncorrelated" ? DecoherenceModel{Uncorrelated{}}
                            : channel == "collective" ? DecoherenceModel{Collective{}}
                                                      : DecoherenceModel{PowerLaw{0.0}};
        SpinSystem analytic = micro;
        if (cfg.oracle_analytic_p) analytic.decoherence = PowerLaw{*cfg.oracle_analytic_p};

        const ProtocolResult res = run_protocol(micro, delta, cfg.grid, cfg.k_max);
        const SignalTrace ref = ideal_quantum({1.0, 0.0, delta}, analytic, cfg.grid);
        const double dev = (res.trace.values - ref.values).cwiseAbs().maxCoeff();

        const double beta_expected = beta_rate(analytic);
        const double beta_fit = fit_ghz_decay_rate(micro, delta, durations, cfg.k_max);
        const double beta_err = std::abs(beta_fit - beta_expected) / std::abs(beta_expected);

        DensityState state = prepare_ghz(ground_state(k, cfg.k_max));
        bool physical = check_physical(state).ok();
        state = evolve_dephasing(state, micro, delta, cfg.grid.t_wait, cfg.k_max);
        physical = physical && check_physical(state).ok();
        physical = physical && check_physical(disentangle(state)).ok();

        const bool pass = dev <= cfg.oracle_tolerance && beta_err <= 1e-9 &&
                          res.satellite_reset_error <= 1e-10 && physical;
        all_pass = all_pass && pass;
        os << "K=" << k << " J=" << format_double(micro.ising_j) << " channel=" << channel
           << " analytic=" << to_string(analytic.decoherence)
           << " max_deviation=" << format_double(dev) << " beta_fit=" << format_double(beta_fit)
           << " beta_expected=" << format_double(beta_expected)
           << " reset_error=" << format_double(res.satellite_reset_error)
           << " physical=" << (physical ? "yes" : "no") << ' ' << (pass ? "PASS" : "FAIL")
           << '\n';
      }
    }
  }
  os << "result = " << (all_pass ? "PASS" : "FAIL") << '\n';
  write_file(output_path(cfg, "oracle_check.txt"), os.str());
  log << os.str().substr(cfg.provenance().size());
  return all_pass ? kSuccess : kNumericalFailure;
}

int cmd_montecarlo(const RunConfig& cfg, std::ostream& log) {
  std::vector<Strategy> kinds;
  if (cfg.mc_strategy != "quantum") kinds.push_back(Strategy::Classical);
  if (cfg.mc_strategy != "classical") kinds.push_back(Strategy::Quantum);

  std::map<Strategy, MonteCarloReport> reports;
  bool valid = true;
  for (Strategy kind : kinds) {
    const MonteCarloReport rep =
        monte_carlo(kind, cfg.system, cfg.grid, cfg.signal, cfg.mc_trials, cfg.seed, cfg.jobs);
    std::ostringstream os;
    os << cfg.provenance();
    write_report(os, rep);
    write_file(output_path(cfg, "montecarlo_" + to_string(kind) + ".txt"), os.str());
    log << to_string(kind) << ": std(delta_hat) = " << format_double(rep.delta_std_empirical)
        << ", CRB = " << format_double(rep.crb_delta)
        << ", efficiency = " << format_double(rep.efficiency)
        << ", failures = " << rep.failure_count << '/' << rep.n_trials << '\n';
    valid = valid && rep.valid;
    reports[kind] = rep;
  }
  if (reports.size() == 2) {
    const double ratio = reports[Strategy::Classical].delta_std_empirical /
                         reports[Strategy::Quantum].delta_std_empirical;
    const double r_inf = ratio_r_infinity(cfg.system, cfg.grid.t_wait);
    std::ostringstream os;
    os << cfg.provenance() << kv("empirical_std_ratio", ratio) << kv("r_infinity", r_inf)
       << kv("discrete_ratio", discrete_crb_ratio(cfg.system, cfg.grid))
       << kv("relative_deviation", std::abs(ratio / r_inf - 1.0));
    write_file(output_path(cfg, "montecarlo_summary.txt"), os.str());
    log << "std ratio classical/quantum = " << format_double(ratio)
        << ", R_inf = " << format_double(r_inf) << '\n';
  }
  return valid ? kSuccess : kNumericalFailure;
}

int cmd_optimize_std(const RunConfig& cfg, std::ostream& log) {
  const double snr = cfg.signal.noise_sigma > 0.0 ? cfg.signal.snr() : 1.0;
  const OptimumReport rep = optimize_classical(cfg.system, cfg.grid.t_sample, snr);
  std::ostringstream os;
  os << cfg.provenance();
  write_optimum(os, rep, cfg.system, cfg.grid.t_sample, snr);
  write_file(output_path(cfg, "optimum_std.txt"), os.str());
  log << "T*/T2* = " << format_double(rep.t_star / cfg.system.t2_star) << ", S*_STD = "
      << format_double(normalized_sensitivity(rep.s_star, cfg.system, cfg.grid.t_sample, snr))
      << " sqrt(t_s)|alpha| sigma/c\n";
  return kSuccess;
}

int cmd_optimize_ghz(const RunConfig& cfg, std::ostream& log) {
  const double snr = cfg.signal.noise_sigma > 0.0 ? cfg.signal.snr() : 1.0;
  const OptimumReport ghz = optimize_quantum(cfg.system, cfg.grid.t_sample, snr);
  const OptimumReport std_opt = optimize_classical(cfg.system, cfg.grid.t_sample, snr);
  std::ostringstream os;
  os << cfg.provenance();
  write_optimum(os, ghz, cfg.system, cfg.grid.t_sample, snr);
  os << kv("s_star_std", std_opt.s_star) << kv("ghz_over_std", ghz.s_star / std_opt.s_star);
  write_file(output_path(cfg, "optimum_ghz.txt"), os.str());
  log << "T*/T2* = " << format_double(ghz.t_star / cfg.system.t2_star)
      << ", T_w*/T2* = " << format_double(ghz.t_wait_star / cfg.system.t2_star)
      << ", S*_GHZ/S*_STD = " << format_double(ghz.s_star / std_opt.s_star) << '\n';
  if (!ghz.starts_agree) log << "warning: Nelder-Mead starts disagree beyond tolerance\n";
  return kSuccess;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const double snr = cfg.signal.noise_sigma > 0.0 ? cfg.signal.snr() : 1.0;
  const double t_s = cfg.grid.t_sample;
  const std::string header = cfg.provenance();

  // Ratio table: closed form only, cheap to regenerate.
  {
    std::ostringstream os;
    os << header;
    write_ratio_csv_header(os);
    for (int k : cfg.sweep_k) {
      for (double p : cfg.sweep_p) {
        write_ratio_csv_row(os, k, p, best_r_infinity(k, p, cfg.system.t2_star), cfg.system.t2_star);
      }
    }
    write_file(output_path(cfg, "r_infinity.csv"), os.str());
  }

  // Sweep table: resume from complete rows of a previous run with this config.
  std::ostringstream head;
  head << header;
  write_sweep_header(head);
  const fs::path path = output_path(cfg, "sweep.csv");
  std::map<std::string, std::string> done;
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    const std::string existing = text.str();
    if (existing.rfind(head.str(), 0) == 0) {
      std::size_t pos = head.str().size();
      while (pos < existing.size()) {
        const std::size_t nl = existing.find('\n', pos);
        if (nl == std::string::npos) break;  // truncated tail row
        const std::string line = existing.substr(pos, nl - pos + 1);
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        if (c1 != std::string::npos && c2 != std::string::npos) done[line.substr(0, c2)] = line;
        pos = nl + 1;
      }
    } else {
      log << "existing " << path.string() << " has a different config; recomputing\n";
    }
  }

  struct Cell {
    int k;
    double p;
    std::string key;
  };
  std::vector<Cell> cells;
  for (int k : cfg.sweep_k) {
    for (double p : cfg.sweep_p) cells.push_back({k, p, std::to_string(k) + "," + format_double(p)});
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << head.str();
  int resumed = 0, failed = 0;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg.jobs)) * 8;
  for (std::size_t start = 0; start < cells.size(); start += batch) {
    const std::size_t end = std::min(cells.size(), start + batch);
    std::vector<std::string> lines(end - start);
    parallel_ranges(static_cast<int>(end - start), cfg.jobs, [&](int b, int e) {
      for (int i = b; i < e; ++i) {
        const Cell& c = cells[start + static_cast<std::size_t>(i)];
        if (done.count(c.key)) continue;
        const SweepRow row = sweep_cell(c.k, c.p, cfg.system, t_s, snr);
        std::ostringstream os;
        write_sweep_row(os, row, cfg.system, t_s, snr);
        lines[static_cast<std::size_t>(i)] = os.str();
        if (!row.ok) lines[static_cast<std::size_t>(i)].insert(0, "#! " + row.error + "\n");
      }
    });
    for (std::size_t i = start; i < end; ++i) {
      const auto it = done.find(cells[i].key);
      if (it != done.end()) {
        out << it->second;
        ++resumed;
      } else {
        const std::string& line = lines[i - start];
        if (line.rfind("#!", 0) == 0) {
          ++failed;
          out << line.substr(line.find('\n') + 1);
        } else {
          out << line;
        }
      }
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }
  log << "sweep: " << cells.size() << " cells (" << resumed << " resumed, " << failed
      << " failed) -> " << path.string() << '\n';
  return failed == 0 ? kSuccess : kNumericalFailure;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log,
                std::ostream& err) {
  try {
    if (name == "signal") return cmd_signal(cfg, log);
    if (name == "crb") return cmd_crb(cfg, log);
    if (name == "oracle-check") return cmd_oracle_check(cfg, log);
    if (name == "montecarlo") return cmd_montecarlo(cfg, log);
    if (name == "optimize-std") return cmd_optimize_std(cfg, log);
    if (name == "optimize-ghz") return cmd_optimize_ghz(cfg, log);
    if (name == "sweep") return cmd_sweep(cfg, log);
    err << "unknown command '" << name << "'\n";
    return kValidationFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace ensmetro
