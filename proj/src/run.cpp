#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "dgb/error.hpp"
#include "dgb/io.hpp"
#include "dgb/symbols.hpp"

namespace dgb::io {

namespace {

using Summary = std::map<std::string, double>;

std::pair<double, double> fit_window(const RunConfig& c) {
  return {c.window_t0.value_or(c.T / 2), c.window_t1.value_or(c.T)};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void record_summary(const TrajectoryRecordd& rec, Summary& s) {
  s["final_l2norm"] = rec.l2norms.back();
  s["initial_l2norm"] = rec.l2norms.front();
  double residual = 0, drift = 0;
  for (double r : rec.energy_residuals) residual = std::max(residual, r);
  for (double m : rec.means) drift = std::max(drift, std::abs(m - rec.means.front()));
  s["max_energy_residual"] = residual;
  s["max_mean_drift"] = drift;
  s["dt"] = rec.dt;
  s["halvings"] = rec.halvings;
}

void run_simulate(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  std::mt19937_64 rng(c.seed);
  const SpectralFieldd u0 = make_field(c.initial, c.N, rng);
  const SymbolTable<double> table(c.params, c.N);
  SimulateOptions<double> opt;
  opt.T = c.T;
  opt.dt = c.dt;
  opt.record_every = c.record_every;
  opt.nonlinear = c.nonlinear;
  opt.damped = c.damped;
  const auto rec = simulate(table, profile, u0, opt);
  record_summary(rec, m.summary);
  const auto grid = to_grid(rec.final_state, c.grid_size());
  m.summary["final_max_abs"] = grid.values().cwiseAbs().maxCoeff();
  const auto [t0, t1] = fit_window(c);
  try {
    const auto fit = decay_fit(rec, t0, t1);
    m.summary["decay_rate"] = fit.lambda;
    m.summary["decay_r2"] = fit.r_squared;
  } catch (const Error& e) {
    m.notes["decay_fit"] = e.what();
  }
  write_text_atomic(c.output_dir / "trajectory.csv", trajectory_csv(rec));
  write_json(c.output_dir / "final_state.json", field_to_json(rec.final_state));
}

void run_stabilize(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  std::mt19937_64 rng(c.seed);
  const SpectralFieldd u0 = make_field(c.initial, c.N, rng);
  const double mean0 = mean(u0);
  const SymbolTable<double> table(shifted_params(c.params, mean0), c.N);
  SimulateOptions<double> opt;
  opt.T = c.T;
  opt.dt = c.dt;
  opt.record_every = c.record_every;
  const auto rec = simulate(table, profile, project_mean_zero(u0), opt);
  record_summary(rec, m.summary);
  const auto [t0, t1] = fit_window(c);
  const auto fit = decay_fit(rec, t0, t1);
  const auto loop = build_closed_loop(table, profile, c.N);
  m.summary["mean"] = mean0;
  m.summary["decay_rate"] = fit.lambda;
  m.summary["decay_M"] = fit.M;
  m.summary["decay_r2"] = fit.r_squared;
  m.summary["spectral_abscissa"] = loop.spectral_abscissa;
  m.summary["rate_ratio"] = fit.lambda / -loop.spectral_abscissa;
  if (fit.truncated) m.notes["decay_fit"] = "window truncated at norm underflow";
  write_text_atomic(c.output_dir / "trajectory.csv", trajectory_csv(rec));
  write_json(c.output_dir / "final_state.json", field_to_json(rec.final_state));
}

void control_summary(const ControlSolution<double>& sol, RunManifest& m) {
  m.summary["terminal_error"] = sol.terminal_error;
  m.summary["control_norm"] = sol.control_norm;
  m.summary["gramian_min_eig"] = sol.gramian_min_eig;
  m.summary["gramian_condition"] = sol.gramian_condition;
  m.summary["eigenvector_condition"] = sol.eigenvector_condition;
  m.notes["method"] = sol.method;
  for (std::size_t i = 0; i < sol.warnings.size(); ++i) m.notes["warning_" + std::to_string(i)] = sol.warnings[i];
}

ControlProblem<double> control_problem(const RunConfig& c, const DampingProfiled& profile) {
  std::mt19937_64 rng(c.seed);
  ControlProblem<double> p;
  p.params = c.params;
  p.profile = profile;
  p.cutoff = c.N;
  p.T = c.T;
  p.v0 = make_field(c.initial, c.N, rng);
  p.v1 = make_field(c.target, c.N, rng);
  p.s = c.control_s;
  return p;
}

void run_control_linear(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  ControlOptions<double> opt;
  opt.certify_dt = c.certify_dt;
  const auto sol = linear_control_gramian(control_problem(c, profile), opt);
  control_summary(sol, m);
  write_text_atomic(c.output_dir / "control.csv", control_csv(sol));
}

void run_control_nonlinear(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  ControlOptions<double> opt;
  opt.certify_dt = c.dt;
  const auto sol = nonlinear_control_global(control_problem(c, profile), opt);
  control_summary(sol, m);
  write_text_atomic(c.output_dir / "control.csv", control_csv(sol));
}

void run_observability(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  const SymbolTable<double> table(c.params, c.N);
  const auto obs = observability_constant(table, profile, c.T, c.N);
  const auto rate = decay_rate_predict(table, profile, c.T, c.N);
  m.summary["cobs"] = obs.cobs;
  m.summary["contraction"] = obs.contraction;
  m.summary["contraction_bound"] = obs.contraction_bound;
  m.summary["certified"] = obs.certified ? 1 : 0;
  m.summary["gamma_gramian"] = rate.gamma_gramian;
  m.summary["gamma_abscissa"] = rate.gamma_abscissa;
  write_json(c.output_dir / "worst_mode.json", field_to_json(obs.worst_mode));
}

ModelParamsd random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelParamsd p;
  p.alpha = 0.1 + 4.9 * unit(rng);
  p.beta = 0.1 + 4.9 * unit(rng);
  p.m = 0.55 + 1.45 * unit(rng);
  p.r = p.m * (0.05 + 0.9 * unit(rng));
  p.mu = -2 + 4 * unit(rng);
  const double lower = std::max(0.0, 2 - 2 * p.m);
  p.delta = lower + (1 - lower) * (0.05 + 0.95 * unit(rng));
  return p;
}

void run_lemmas(const RunConfig& c, const DampingProfiled& profile, RunManifest& m) {
  const int cutoff = std::max(c.N, c.lemmas.n_max + 1);
  const SymbolTable<double> table(c.params, cutoff);

  const auto classes = multiplicity_scan(table);
  {
    std::ostringstream out;
    out << "representative,count,lambda,members\n";
    for (const auto& cls : classes.classes) {
      if (cls.count() < 2) continue;
      out << cls.representative << ',' << cls.count() << ',' << format_double(table.lambda(cls.representative))
          << ',';
      for (std::size_t i = 0; i < cls.members.size(); ++i) out << (i ? " " : "") << cls.members[i];
      out << '\n';
    }
    write_text_atomic(c.output_dir / "lemma_multiplicity.csv", out.str());
  }
  m.summary["max_multiplicity"] = classes.max_multiplicity;
  m.summary["simple_beyond"] = classes.simple_beyond;

  const auto gaps = gap_check(table, c.lemmas.gap_kmin);
  {
    std::ostringstream out;
    out << "k,gap,bound,pass\n";
    for (const auto& row : gaps.rows) {
      out << row.k << ',' << format_double(row.gap) << ',' << format_double(row.bound) << ',' << (row.pass ? 1 : 0)
          << '\n';
    }
    write_text_atomic(c.output_dir / "lemma_gap.csv", out.str());
  }
  m.summary["gap_threshold"] = gaps.threshold ? *gaps.threshold : -1;
  m.summary["gap_monotone"] = gaps.monotone_beyond_threshold ? 1 : 0;

  const auto full = resonance_check(table, c.lemmas.n_max, 1);
  const int threshold = std::max(resonance_threshold(full), c.lemmas.resonance_a);
  {
    std::ostringstream out;
    out << "shell,min_ratio,k1,k2,k3\n";
    for (const auto& shell : full.shells) {
      out << shell.max_abs_k << ',' << format_double(shell.min_ratio) << ',' << shell.witness[0] << ','
          << shell.witness[1] << ',' << shell.witness[2] << '\n';
    }
    write_text_atomic(c.output_dir / "lemma_resonance.csv", out.str());
  }
  m.summary["resonance_threshold"] = threshold;
  if (threshold <= c.lemmas.n_max) {
    const auto above = resonance_check(table, c.lemmas.n_max, threshold);
    m.summary["resonance_min_ratio"] = above.min_ratio;
    m.summary["resonance_triples"] = static_cast<double>(above.triples);
  }

  const auto modulation = modulation_check(table, c.lemmas.n_max, c.lemmas.modulation_floor);
  m.summary["modulation_min_ratio"] = modulation.min_ratio;

  const auto [lo, hi] = lemma_d_equivalence(profile, c.lemmas.d_range);
  m.summary["d_ratio_min"] = lo;
  m.summary["d_ratio_max"] = hi;
  write_text_atomic(c.output_dir / "lemma_d_symbol.csv", d_table_csv(profile, c.lemmas.d_range));

  std::mt19937_64 rng(c.seed);
  int sweep_max = 0;
  for (int i = 0; i < c.lemmas.sweep_points; ++i) {
    const SymbolTable<double> sample(random_params(rng), c.lemmas.n_max);
    sweep_max = std::max(sweep_max, multiplicity_scan(sample).max_multiplicity);
  }
  m.summary["sweep_max_multiplicity"] = sweep_max;
}

std::string canonical(const RunConfig& c) {
  std::string out = "experiment=" + c.experiment + "\nseed=" + std::to_string(c.seed) + "\n";
  for (const auto& [k, v] : c.entries) {
    if (k == "experiment" || k == "seed" || k == "output") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["run_id"] = run_id;
  j["profile_hash"] = profile_hash;
  j["version"] = version;
  j["wall_time_s"] = wall_time;
  j["config"] = config;
  j["summary"] = summary;
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

RunManifest run(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.experiment = c.experiment;
  m.run_id = hex64(fnv1a(canonical(c)));
  m.config = c.entries;
  m.config["experiment"] = c.experiment;
  m.config["seed"] = std::to_string(c.seed);

  try {
    const DampingProfiled profile = make_profile(c.profile, c.params.delta);
    m.profile_hash = profile_hash(profile);
    std::filesystem::create_directories(c.output_dir);
    write_json(c.output_dir / "profile.json", profile_to_json(profile));
    if (c.experiment == "simulate") {
      run_simulate(c, profile, m);
    } else if (c.experiment == "stabilize") {
      run_stabilize(c, profile, m);
    } else if (c.experiment == "control-linear") {
      run_control_linear(c, profile, m);
    } else if (c.experiment == "control-nonlinear") {
      run_control_nonlinear(c, profile, m);
    } else if (c.experiment == "observability") {
      run_observability(c, profile, m);
    } else if (c.experiment == "lemmas") {
      run_lemmas(c, profile, m);
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown experiment '" + c.experiment + "'");
    }
  } catch (const BlowUpError& e) {
    throw BlowUpError(e.last_valid_time(), c.experiment + ": " + e.message());
  } catch (const Error& e) {
    throw Error(e.kind(), c.experiment + ": " + e.message());
  }

  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(c.output_dir / "manifest.json", m.to_json());
  return m;
}

std::vector<RunManifest> run_sweep(const std::vector<RunConfig>& configs, int threads) {
  std::set<std::filesystem::path> dirs;
  for (const auto& c : configs) {
    if (!dirs.insert(std::filesystem::weakly_canonical(c.output_dir)).second) {
      throw Error(ErrorKind::InvalidConfig, "sweep configs share output directory '" + c.output_dir.string() + "'");
    }
  }
  std::vector<RunManifest> out(configs.size());
  std::vector<std::exception_ptr> failures(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = run(configs[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
  std::vector<std::jthread> pool;
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  pool.clear();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

}  // namespace dgb::io
