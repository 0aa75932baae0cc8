// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dgb/control.hpp"
#include "dgb/damping.hpp"
#include "dgb/dynamics.hpp"
#include "dgb/error.hpp"
#include "dgb/io.hpp"
#include "dgb/symbols.hpp"

#ifndef DGB_CONFIG_DIR
#define DGB_CONFIG_DIR "configs"
#endif

using namespace dgb;
using cd = std::complex<double>;

namespace {

constexpr double kPiD = 3.14159265358979323846;
constexpr double kHalfPi = kPiD / 2;

// Resonance minimum ratios above the reported threshold, Nmax = 64.
constexpr double kBaselineBenjamin = 1;
constexpr double kBaselineGenericA = 0.039213562373095132;
constexpr double kBaselineGenericB = 1.5041476267681322;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DampingProfiled bump(double delta = 1.0) { return make_profile_bump(kHalfPi, 3 * kHalfPi, 64, 1024, delta); }

SpectralFieldd random_field(int n, std::mt19937_64& rng, double decay, double amplitude = 1.0) {
  std::normal_distribution<double> normal;
  CoeffVector<double> c = CoeffVector<double>::Zero(2 * n + 1);
  for (int k = 1; k <= n; ++k) {
    c(n + k) = amplitude * std::pow(double(k), -decay) * cd(normal(rng), normal(rng));
    c(n - k) = std::conj(c(n + k));
  }
  return SpectralFieldd(c);
}

ModelParamsd generic_a() {
  ModelParamsd p;
  p.alpha = 2;
  p.beta = 0.5;
  p.m = 1.5;
  p.r = 0.75;
  p.mu = 0.3;
  p.delta = 0.8;
  return p;
}

ModelParamsd generic_b() {
  ModelParamsd p;
  p.alpha = 0.7;
  p.beta = 1.3;
  p.m = 0.8;
  p.r = 0.3;
  p.mu = -0.5;
  p.delta = 0.6;
  return p;
}

ModelParamsd random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParamsd p;
  p.alpha = 0.1 + 4.9 * u(rng);
  p.beta = 0.1 + 4.9 * u(rng);
  p.m = 0.55 + 1.45 * u(rng);
  p.r = p.m * (0.05 + 0.9 * u(rng));
  p.mu = -2 + 4 * u(rng);
  const double lo = std::max(0.0, 2 - 2 * p.m);
  p.delta = lo + (1 - lo) * (0.05 + 0.95 * u(rng));
  return p;
}

double max_residual(const TrajectoryRecordd& rec) {
  return *std::max_element(rec.energy_residuals.begin(), rec.energy_residuals.end());
}

// ---------------------------------------------------------------------------

Outcome decomposition() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  double worst = 0;
  for (const auto& p : {make_profile_global(1.0), bump()}) {
    for (int i = 0; i < 100; ++i) worst = std::max(worst, decomposition_residual(p, random_field(64, rng, 0.5).coeffs()));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-10 && elapsed < 10, fmt("max residual %.3g over 200 fields, %.2f s", worst, elapsed)};
}

Outcome dissipativity() {
  std::mt19937_64 rng(2);
  const SymbolTable<double> table(ModelParamsd::benjamin(), 64);
  double worst = 0;
  bool monotone = true;
  for (const auto& p : {make_profile_global(1.0), bump()}) {
    for (int i = 0; i < 20; ++i) {
      const auto v = random_field(64, rng, 0.5);
      const double q = fourier::inner(CoeffVector<double>(apply_GDdeltaG_raw(p, v.coeffs())), v.coeffs()).real();
      const double rate = dissipation_rate(p, v);
      worst = std::max(worst, std::abs(q - rate) / std::max(1.0, rate));
    }
    const auto v = random_field(64, rng, 0.5);
    const auto loop = build_closed_loop(table, p, 16);
    const auto w0 = random_field(16, rng, 0.5);
    double prev_s = l2_norm(v), prev_w = l2_norm(w0);
    for (int i = 1; i <= 100; ++i) {
      const double t = 0.1 * i;
      const double s = l2_norm(semigroup_apply(table, p, v, t));
      const double w = l2_norm(linear_propagate(loop, w0, t));
      monotone = monotone && s <= prev_s * (1 + 1e-12) && w <= prev_w * (1 + 1e-12);
      prev_s = s;
      prev_w = w;
    }
  }
  return {worst <= 1e-12 && monotone,
          fmt("max |<GDGv,v> - |D^(d/2)Gv|^2| = %.3g, norms monotone: %s", worst, monotone ? "yes" : "no")};
}

Outcome symbol_equivalence() {
  const auto [lo, hi] = lemma_d_equivalence(bump(), 256);
  const auto global = make_profile_global(1.0);
  double worst = 0;
  for (int k = 1; k <= 256; ++k) {
    const double expect = k / (4 * kPiD * kPiD);
    worst = std::max(worst, std::abs(global.d(k) - expect) / expect);
  }
  return {lo > 0 && std::isfinite(hi) && worst <= 1e-14,
          fmt("bump d(k)/<k> in [%.6g, %.6g]; global max rel error %.3g", lo, hi, worst)};
}

Outcome eigenvalue_structure() {
  const SymbolTable<double> table(ModelParamsd::benjamin(), 200);
  const auto classes = multiplicity_scan(table);
  const bool zero_class = classes.class_of(0).members == std::vector<int>{-1, 0, 1};
  std::mt19937_64 rng(4);
  int sweep_max = 0;
  for (int i = 0; i < 50; ++i) {
    sweep_max = std::max(sweep_max, multiplicity_scan(SymbolTable<double>(random_params(rng), 200)).max_multiplicity);
  }
  const auto gaps = gap_check(table, 1);
  bool all_pass = gaps.threshold.has_value();
  if (all_pass) {
    for (const auto& row : gaps.rows) {
      if (row.k >= *gaps.threshold) all_pass = all_pass && row.pass;
    }
  }
  const int threshold = gaps.threshold.value_or(-1);
  return {zero_class && sweep_max <= 5 && all_pass && threshold <= 5,
          fmt("class {-1,0,1}: %s; sweep max multiplicity %d; gap threshold %d", zero_class ? "found" : "missing",
              sweep_max, threshold)};
}

Outcome resonance() {
  struct Set {
    const char* name;
    ModelParamsd params;
    double baseline;
  };
  const Set sets[] = {{"benjamin", ModelParamsd::benjamin(), kBaselineBenjamin},
                      {"generic-a", generic_a(), kBaselineGenericA},
                      {"generic-b", generic_b(), kBaselineGenericB}};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& s : sets) {
    const SymbolTable<double> table(s.params, 64);
    const int a = resonance_threshold(resonance_check(table, 64, 1));
    const auto report = resonance_check(table, 64, a);
    const bool matches = std::abs(report.min_ratio - s.baseline) <= 1e-10 * s.baseline;
    ok = ok && report.min_ratio > 0 && matches;
    detail << s.name << ": a=" << a << " minRatio=" << io::format_double(report.min_ratio)
           << (matches ? "" : " (baseline mismatch)") << "; ";
  }
  return {ok, detail.str()};
}

Outcome energy_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const SymbolTable<double> table(ModelParamsd::benjamin(), 64);
  const auto p = bump();
  const auto v0 = SpectralFieldd::cosine(64, 1, 0.1);
  SimulateOptions<double> opt;
  opt.T = 2;
  opt.dt = 1e-4;
  const double r1 = max_residual(simulate(table, p, v0, opt));
  opt.dt = 5e-5;
  const double r2 = max_residual(simulate(table, p, v0, opt));
  const double elapsed = seconds_since(t0);
  const double ratio = r1 / r2;
  return {r1 <= 1e-6 && ratio >= 8 && elapsed < 60,
          fmt("residual %.3g at dt=1e-4, %.3g at dt=5e-5 (reduction %.2fx, need >= 8x), %.1f s", r1, r2, ratio,
              elapsed)};
}

Outcome mean_invariance() {
  const SymbolTable<double> table(ModelParamsd::benjamin(), 64);
  const auto u0 = SpectralFieldd::constant(64, 0.3) + SpectralFieldd::cosine(64, 1, 0.1);
  SimulateOptions<double> opt;
  opt.T = 5;
  opt.dt = 1e-3;
  opt.record_every = 10;
  const auto rec = simulate(table, bump(), u0, opt);
  double drift = 0;
  for (double m : rec.means) drift = std::max(drift, std::abs(m - 0.3));
  return {drift <= 1e-10, fmt("max |[u(t)] - 0.3| = %.3g", drift)};
}

Outcome linear_decay() {
  const SymbolTable<double> table(ModelParamsd::benjamin(), 16);
  SimulateOptions<double> opt;
  opt.nonlinear = false;
  opt.dt = 0.01;
  opt.record_every = 10;
  opt.T = 40;
  const auto global = simulate(table, make_profile_global(1.0), SpectralFieldd::cosine(16, 1, 0.1), opt);
  const double expect = 1 / (4 * kPiD * kPiD);
  const double g_rate = decay_fit(global, 20.0, 40.0).lambda;

  opt.T = 400;
  const auto p = bump();
  const auto rec = simulate(table, p, SpectralFieldd::cosine(16, 1, 0.1), opt);
  const double b_rate = decay_fit(rec, 200.0, 400.0).lambda;
  const double b_abscissa = -build_closed_loop(table, p, 16).spectral_abscissa;

  double worst_abscissa = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(8);
  std::vector<std::pair<ModelParamsd, DampingProfiled>> configs{
      {ModelParamsd::benjamin(), make_profile_global(1.0)},
      {ModelParamsd::benjamin(), p},
      {ModelParamsd::benjamin(), translated(p, 1.0)},
      {generic_a(), bump(0.8)},
      {generic_b(), make_profile_bump(0.5, 2.0, 64, 1024, 0.6)}};
  for (int i = 0; i < 3; ++i) {
    const auto q = random_params(rng);
    configs.emplace_back(q, bump(q.delta));
  }
  for (const auto& [params, profile] : configs) {
    const SymbolTable<double> t(params, 16);
    worst_abscissa = std::max(worst_abscissa, build_closed_loop(t, profile, 16).spectral_abscissa);
  }
  const bool ok = std::abs(g_rate - expect) <= 0.01 * expect && std::abs(b_rate - b_abscissa) <= 0.1 * b_abscissa &&
                  worst_abscissa < 0;
  return {ok, fmt("global rate %.8g vs %.8g; bump rate %.6g vs abscissa %.6g; max abscissa over %d configs %.4g",
                  g_rate, expect, b_rate, b_abscissa, static_cast<int>(configs.size()), worst_abscissa)};
}

Outcome nonlinear_stabilization() {
  const double mean0 = 0.1;
  const SymbolTable<double> table(shifted_params(ModelParamsd::benjamin(), mean0), 16);
  const auto p = bump();
  SimulateOptions<double> opt;
  opt.T = 400;
  opt.dt = 0.01;
  opt.record_every = 10;
  std::vector<double> rates;
  bool decays = true;
  for (double amp : {1e-3, 1e-2, 1e-1}) {
    const auto rec = simulate(table, p, SpectralFieldd::cosine(16, 1, amp), opt);
    const auto fit = decay_fit(rec, 200.0, 400.0);
    rates.push_back(fit.lambda);
    decays = decays && fit.lambda > 0 && fit.r_squared >= 0.99 && rec.l2norms.back() < rec.l2norms.front();
  }
  bool ok = decays;
  double radius = 0;
  const double amps[] = {1e-3, 1e-2, 1e-1};
  for (int i = 0; i < 3; ++i) {
    if (rates[i] >= 0.9 * rates[0]) radius = amps[i];
    ok = ok && rates[i] >= 0.9 * rates[0];
  }
  return {ok, fmt("rates %.6g, %.6g, %.6g (GB6, mean %.1f); empirical smallness radius >= %.0e", rates[0], rates[1],
                  rates[2], mean0, radius)};
}

Outcome linear_control() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(10);
  ControlProblem<double> prob;
  prob.profile = bump();
  prob.cutoff = 16;
  prob.T = 1;
  prob.v0 = random_field(16, rng, 2.0, 0.1);
  prob.v1 = random_field(16, rng, 2.0, 0.1);
  ControlOptions<double> opt;
  opt.certify_dt = 1e-5;
  const auto sol = linear_control_gramian(prob, opt);

  // Global gain: every mode is steered independently.
  ControlProblem<double> gprob = prob;
  gprob.profile = make_profile_global(1.0);
  ControlOptions<double> gopt;
  gopt.certify_dt = 1e-3;
  const auto gsol = linear_control_gramian(gprob, gopt);
  const SymbolTable<double> table(gprob.params, 16);
  const double tau = 2 * kPiD;
  double worst = 0, scale = 0;
  for (int k = -16; k <= 16; ++k) {
    if (k == 0) continue;
    const double d = gprob.profile.d(k);
    const cd a(-d, table.lambda(k));
    const double w = (1 - std::exp(-2 * d)) / (2 * d) / (tau * tau);
    const cd xi = (gprob.v1[k] - std::exp(a) * gprob.v0[k]) / w;
    for (std::size_t i = 0; i < gsol.times.size(); ++i) {
      const cd expect = std::exp(std::conj(a) * (1 - gsol.times[i])) * xi / tau;
      worst = std::max(worst, std::abs(gsol.h[i](k + 16) - expect));
      scale = std::max(scale, std::abs(expect));
    }
  }

  // Empirical constant of the control bound over a few endpoint pairs.
  double nu = 0;
  ControlOptions<double> probe;
  probe.certify_dt = 1e-3;
  for (int i = 0; i < 4; ++i) {
    ControlProblem<double> q = prob;
    q.v0 = random_field(16, rng, 2.0, 0.1);
    q.v1 = random_field(16, rng, 2.0, 0.1);
    nu = std::max(nu, linear_control_gramian(q, probe).control_norm / (l2_norm(q.v0) + l2_norm(q.v1)));
  }
  const double elapsed = seconds_since(t0);
  return {sol.terminal_error <= 1e-6 && worst <= 1e-8 * scale && elapsed < 120,
          fmt("bump terminal error %.3g (Gramian cond %.3g); global per-mode max rel error %.3g; nu ~ %.4g; %.1f s",
              sol.terminal_error, sol.gramian_condition, worst / scale, nu, elapsed)};
}

Outcome nonlinear_control() {
  auto solve = [](int n) {
    ControlProblem<double> prob;
    prob.cutoff = n;
    prob.T = 1;
    prob.v0 = SpectralFieldd::cosine(n, 1, 0.05);
    prob.v1 = SpectralFieldd::cosine(n, 2, 0.05);
    ControlOptions<double> opt;
    opt.certify_dt = 1e-3;
    return nonlinear_control_global(prob, opt).terminal_error;
  };
  const double e64 = solve(64), e128 = solve(128);
  return {e64 <= 1e-6 && e128 < e64,
          fmt("terminal error %.3g at N=64, %.3g at N=128 (must decrease)", e64, e128)};
}

Outcome observability() {
  const SymbolTable<double> table(ModelParamsd::benjamin(), 16);
  const auto global = make_profile_global(1.0);
  const auto og = observability_constant(table, global, 1.0, 16);
  const auto ob = observability_constant(table, bump(), 1.0, 16);
  const double closed = 2 / (1 - std::exp(-2 * global.d(1)));
  const bool ok = std::isfinite(og.cobs) && og.cobs > 2 && std::isfinite(ob.cobs) && ob.cobs > 2 && og.certified &&
                  ob.certified && std::abs(og.cobs - closed) <= 1e-8 * closed;
  return {ok, fmt("Cobs global %.10g (closed form %.10g), bump %.6g; contraction %.6g <= %.6g", og.cobs, closed,
                  ob.cobs, ob.contraction, ob.contraction_bound)};
}

Outcome biorthogonality() {
  const SymbolTable<double> table(ModelParamsd::benjamin(), 8);
  const auto family = biorthogonal_family(table, {1, 2, 3, 4, 5}, 1.0);
  const double err = (pairing_matrix(family) - ComplexMatrix<double>::Identity(5, 5)).cwiseAbs().maxCoeff();
  return {err <= 1e-8, fmt("max |P - I| = %.3g (Gram cond %.3g)", err, family.condition)};
}

Outcome determinism() {
  const std::filesystem::path dir(DGB_CONFIG_DIR);
  const auto work = std::filesystem::temp_directory_path() / "dgb_acceptance";
  double worst = 0;
  int runs = 0;
  bool ids = true;
  for (const char* name : {"lemmas_benjamin.cfg", "simulate_bump.cfg", "stabilize_bump.cfg", "control_linear_bump.cfg",
                           "control_nonlinear_global.cfg", "observability_bump.cfg"}) {
    auto a = io::load_config(dir / name);
    auto b = a;
    a.output_dir = work / (std::string(name) + ".a");
    b.output_dir = work / (std::string(name) + ".b");
    const auto ma = io::run(a);
    const auto mb = io::run(b);
    ids = ids && ma.run_id == mb.run_id && ma.summary.size() == mb.summary.size();
    for (const auto& [key, value] : ma.summary) {
      const double other = mb.summary.at(key);
      worst = std::max(worst, std::abs(value - other) / std::max(1.0, std::abs(value)));
    }
    ++runs;
  }
  std::filesystem::remove_all(work);
  return {ids && worst <= 1e-10, fmt("%d configs rerun, max scalar difference %.3g", runs, worst)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "decomposition identity", decomposition},
      {2, "dissipativity and contraction", dissipativity},
      {3, "symbol equivalence", symbol_equivalence},
      {4, "eigenvalue structure", eigenvalue_structure},
      {5, "resonance bound", resonance},
      {6, "energy identity", energy_identity},
      {7, "mean invariance", mean_invariance},
      {8, "linear decay rate", linear_decay},
      {9, "nonlinear local stabilization", nonlinear_stabilization},
      {10, "linear exact control", linear_control},
      {11, "nonlinear exact control", nonlinear_control},
      {12, "observability", observability},
      {13, "biorthogonality", biorthogonality},
      {14, "determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("%s [%2d] %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
