#pragma once

// Time evolution: the modewise dissipative semigroup, the truncated linear
// closed loop W(t), an ETDRK4 integrator for the damped nonlinear equation,
// and the energy/decay diagnostics computed from trajectories.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dgb/damping.hpp"
#include "dgb/error.hpp"
#include "dgb/params.hpp"
#include "dgb/spectral.hpp"
#include "dgb/symbols.hpp"

namespace dgb {

// ---------------------------------------------------------------------------
// Mean-zero packing: modes ordered -N..-1, 1..N.

inline int mean_zero_index(int k, int n) { return k < 0 ? k + n : k + n - 1; }
inline int mean_zero_mode(int i, int n) { return i < n ? i - n : i - n + 1; }

template <typename Scalar>
CoeffVector<Scalar> pack_mean_zero(const CoeffVector<Scalar>& c) {
  const int n = band_of(c.size());
  CoeffVector<Scalar> x(2 * n);
  x.head(n) = c.head(n);
  x.tail(n) = c.tail(n);
  return x;
}

template <typename Scalar>
CoeffVector<Scalar> unpack_mean_zero(const CoeffVector<Scalar>& x, Scalar mean = 0) {
  const int n = static_cast<int>(x.size() / 2);
  CoeffVector<Scalar> c(2 * n + 1);
  c.head(n) = x.head(n);
  c(n) = Complex<Scalar>(mean);
  c.tail(n) = x.tail(n);
  return c;
}

/// Drops the k = 0 row and column of a (2N+1)-square mode matrix.
template <typename Scalar>
ComplexMatrix<Scalar> mean_zero_block(const ComplexMatrix<Scalar>& m) {
  const Eigen::Index n = band_of(m.rows());
  ComplexMatrix<Scalar> out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.topLeftCorner(n, n);
  out.topRightCorner(n, n) = m.topRightCorner(n, n);
  out.bottomLeftCorner(n, n) = m.bottomLeftCorner(n, n);
  out.bottomRightCorner(n, n) = m.bottomRightCorner(n, n);
  return out;
}

/// GB6 form: with u = v + mu0 the transport term 2 mu0 v_x joins the
/// dispersion, so the perturbation v evolves under mu + mu0.
template <typename Scalar>
ModelParams<Scalar> shifted_params(const ModelParams<Scalar>& params, Scalar mean) {
  return params.with_mu(params.mu + mean);
}

// ---------------------------------------------------------------------------
// Dissipative semigroup

/// vhat(k) -> exp(i lambda_k t - d(k) t) vhat(k).
template <typename Scalar>
SpectralField<Scalar> semigroup_apply(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                      const SpectralField<Scalar>& v0, Scalar t) {
  if (t < 0) throw Error(ErrorKind::BackwardTime, "semigroup is only propagated forward in time");
  const int n = v0.cutoff();
  if (n > table.cutoff()) throw Error(ErrorKind::InvalidConfig, "symbol table cutoff below field cutoff");
  CoeffVector<Scalar> c = v0.coeffs();
  for (int k = -n; k <= n; ++k) {
    c(k + n) *= std::exp(Complex<Scalar>(-p.d(k) * t, table.lambda(k) * t));
  }
  return SpectralField<Scalar>(std::move(c));
}

// ---------------------------------------------------------------------------
// Truncated linear closed loop

template <typename Scalar = double>
struct LinearClosedLoop {
  int cutoff = 0;
  bool damped = true;
  ComplexMatrix<Scalar> generator;  ///< A = diag(i lambda) - B on the 2N mean-zero modes
  ComplexMatrix<Scalar> damping;    ///< B
  CoeffVector<Scalar> eigenvalues;
  ComplexMatrix<Scalar> eigenvectors;
  ComplexMatrix<Scalar> eigenvectors_inverse;
  Scalar spectral_abscissa = 0;
  Scalar eigenvector_condition = 1;

  int dimension() const { return 2 * cutoff; }

  /// e^{tA}, by scaling and squaring.
  ComplexMatrix<Scalar> transition(Scalar t) const {
    if (t < 0) throw Error(ErrorKind::BackwardTime, "closed loop is only propagated forward in time");
    return ComplexMatrix<Scalar>(t * generator).exp();
  }
};

using LinearClosedLoopd = LinearClosedLoop<double>;

template <typename Scalar>
LinearClosedLoop<Scalar> build_closed_loop(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                           int n, bool damped = true) {
  if (n < 1 || n > table.cutoff()) {
    throw Error(ErrorKind::InvalidConfig, "closed-loop cutoff must lie in [1, table cutoff]");
  }
  LinearClosedLoop<Scalar> loop;
  loop.cutoff = n;
  loop.damped = damped;
  const int dim = 2 * n;
  loop.damping = damped ? mean_zero_block(damping_matrix(p, n)) : ComplexMatrix<Scalar>::Zero(dim, dim);
  loop.generator = -loop.damping;
  for (int i = 0; i < dim; ++i) loop.generator(i, i) += Complex<Scalar>(0, table.lambda(mean_zero_mode(i, n)));

  Eigen::ComplexEigenSolver<ComplexMatrix<Scalar>> solver(loop.generator);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalDegeneracy, "eigen-solver failed on the closed-loop generator");
  }
  loop.eigenvalues = solver.eigenvalues();
  loop.eigenvectors = solver.eigenvectors();
  Eigen::PartialPivLU<ComplexMatrix<Scalar>> lu(loop.eigenvectors);
  loop.eigenvectors_inverse = lu.inverse();
  loop.eigenvector_condition = loop.eigenvectors.norm() * loop.eigenvectors_inverse.norm();
  if (!std::isfinite(loop.eigenvector_condition)) {
    throw Error(ErrorKind::NumericalDegeneracy, "closed-loop generator is defective");
  }
  loop.spectral_abscissa = loop.eigenvalues.real().maxCoeff();
  return loop;
}

/// W(t) v0; the mean is carried unchanged.
template <typename Scalar>
SpectralField<Scalar> linear_propagate(const LinearClosedLoop<Scalar>& loop, const SpectralField<Scalar>& v0,
                                       Scalar t) {
  const CoeffVector<Scalar> c = v0.rebanded(loop.cutoff).coeffs();
  const CoeffVector<Scalar> x = loop.transition(t) * pack_mean_zero(c);
  return SpectralField<Scalar>(unpack_mean_zero(x, c(loop.cutoff).real()), Scalar(1e-10));
}

// ---------------------------------------------------------------------------
// phi functions of exponential integrators

template <typename Scalar>
struct PhiValues {
  Complex<Scalar> phi1, phi2, phi3;
};

/// phi_j(z) = sum_n z^n / (n + j)!. Series below |z| = 1/2, closed forms above.
template <typename Scalar>
PhiValues<Scalar> phi_functions(Complex<Scalar> z) {
  using C = Complex<Scalar>;
  if (std::abs(z) < Scalar(0.5)) {
    PhiValues<Scalar> out{C(0), C(0), C(0)};
    C power(1);
    Scalar fact1 = 1, fact2 = 2, fact3 = 6;  // (n+1)!, (n+2)!, (n+3)!
    for (int n = 0; n < 30; ++n) {
      out.phi1 += power / fact1;
      out.phi2 += power / fact2;
      out.phi3 += power / fact3;
      power *= z;
      fact1 *= Scalar(n + 2);
      fact2 *= Scalar(n + 3);
      fact3 *= Scalar(n + 4);
    }
    return out;
  }
  const C ez = std::exp(z);
  const C p1 = (ez - Scalar(1)) / z;
  const C p2 = (ez - Scalar(1) - z) / (z * z);
  const C p3 = (ez - Scalar(1) - z - z * z / Scalar(2)) / (z * z * z);
  return {p1, p2, p3};
}

// ---------------------------------------------------------------------------
// ETDRK4 integrator

/// Returns the coefficients of the control h at time t (any cutoff).
template <typename Scalar>
using Forcing = std::function<CoeffVector<Scalar>(Scalar)>;

template <typename Scalar = double>
class Etdrk4 {
 public:
  struct Options {
    bool nonlinear = true;
    bool damped = true;
  };

  Etdrk4(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p, int n, Scalar dt, Options options)
      : n_(n), dt_(dt), options_(options), profile_(p) {
    if (!(dt > 0)) throw Error(ErrorKind::InvalidConfig, "time step must be positive");
    if (n < 1 || n > table.cutoff()) {
      throw Error(ErrorKind::InvalidConfig, "integrator cutoff must lie in [1, table cutoff]");
    }
    const int size = 2 * n + 1;
    e_.resize(size);
    e2_.resize(size);
    q_.resize(size);
    f1_.resize(size);
    f2_.resize(size);
    f3_.resize(size);
    for (int k = -n; k <= n; ++k) {
      const Scalar decay = options.damped ? p.d(k) : Scalar(0);
      const Complex<Scalar> z = Complex<Scalar>(-decay, table.lambda(k)) * dt;
      const auto full = phi_functions(z);
      const auto half = phi_functions(z / Scalar(2));
      const int i = k + n;
      e_(i) = std::exp(z);
      e2_(i) = std::exp(z / Scalar(2));
      q_(i) = dt / Scalar(2) * half.phi1;
      f1_(i) = dt * (full.phi1 - Scalar(3) * full.phi2 + Scalar(4) * full.phi3);
      f2_(i) = dt * (full.phi2 - Scalar(2) * full.phi3);
      f3_(i) = dt * (Scalar(4) * full.phi3 - full.phi2);
    }
    if (options.damped && p.cutoff() > 0) {
      remainder_ = damping_matrix(p, n);
      for (int k = -n; k <= n; ++k) remainder_(k + n, k + n) -= p.d(k);
      remainder_.row(n).setZero();
      remainder_.col(n).setZero();
      has_remainder_ = true;
    }
    control_ = g_matrix_square(p, n);
    control_.row(n).setZero();
  }

  Scalar dt() const { return dt_; }
  int cutoff() const { return n_; }

  /// Everything except the diagonal linear part: -P_N (v^2)_x - (N1 + R) v + P_N G h.
  CoeffVector<Scalar> remainder(const CoeffVector<Scalar>& v, Scalar t, const Forcing<Scalar>* forcing) const {
    CoeffVector<Scalar> out = CoeffVector<Scalar>::Zero(v.size());
    if (options_.nonlinear) out -= nonlinear_term_raw(v);
    if (has_remainder_) out.noalias() -= remainder_ * v;
    if (forcing && *forcing) out.noalias() += control_ * fourier::rebanded(CoeffVector<Scalar>((*forcing)(t)), n_);
    out(n_) = Complex<Scalar>(0);
    return out;
  }

  /// P_N G h for a control h.
  CoeffVector<Scalar> actuate(const CoeffVector<Scalar>& h) const {
    return control_ * fourier::rebanded(h, n_);
  }

  CoeffVector<Scalar> step(const CoeffVector<Scalar>& v, Scalar t, const Forcing<Scalar>* forcing = nullptr) const {
    const Scalar half = t + dt_ / 2;
    const CoeffVector<Scalar> nv = remainder(v, t, forcing);
    const CoeffVector<Scalar> a = e2_.cwiseProduct(v) + q_.cwiseProduct(nv);
    const CoeffVector<Scalar> na = remainder(a, half, forcing);
    const CoeffVector<Scalar> b = e2_.cwiseProduct(v) + q_.cwiseProduct(na);
    const CoeffVector<Scalar> nb = remainder(b, half, forcing);
    const CoeffVector<Scalar> c = e2_.cwiseProduct(a) + q_.cwiseProduct(Scalar(2) * nb - nv);
    const CoeffVector<Scalar> nc = remainder(c, t + dt_, forcing);
    CoeffVector<Scalar> out = e_.cwiseProduct(v) + f1_.cwiseProduct(nv) +
                              Scalar(2) * f2_.cwiseProduct(na + nb) + f3_.cwiseProduct(nc);
    out(n_) = v(n_);
    fourier::make_hermitian(out);
    return out;
  }

  /// d/dt of (1/2)||v||^2 due to the dissipation, as a positive number.
  Scalar dissipation(const CoeffVector<Scalar>& v) const {
    return options_.damped ? dissipation_rate_raw(profile_, v) : Scalar(0);
  }

  /// (P_N G h, v) in L2.
  Scalar power(const CoeffVector<Scalar>& v, Scalar t, const Forcing<Scalar>* forcing) const {
    if (!forcing || !*forcing) return 0;
    const CoeffVector<Scalar> gh = actuate((*forcing)(t));
    return kTwoPi<Scalar> * v.dot(gh).real();
  }

 private:
  int n_;
  Scalar dt_;
  Options options_;
  DampingProfile<Scalar> profile_;
  CoeffVector<Scalar> e_, e2_, q_, f1_, f2_, f3_;
  ComplexMatrix<Scalar> remainder_;
  ComplexMatrix<Scalar> control_;
  bool has_remainder_ = false;
};

/// One ETDRK4 step of the damped (or undamped) equation for the perturbation v.
template <typename Scalar>
SpectralField<Scalar> nonlinear_step(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                     const SpectralField<Scalar>& v, Scalar dt,
                                     const Forcing<Scalar>& forcing = {}) {
  const Etdrk4<Scalar> stepper(table, p, v.cutoff(), dt, {});
  const CoeffVector<Scalar> out = stepper.step(v.coeffs(), Scalar(0), &forcing);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out(i).real()) || !std::isfinite(out(i).imag())) {
      throw BlowUpError(0.0, "non-finite state after one step");
    }
  }
  return SpectralField<Scalar>(out);
}

// ---------------------------------------------------------------------------
// Trajectories

template <typename Scalar = double>
struct TrajectoryRecord {
  std::vector<Scalar> times;
  std::vector<SpectralField<Scalar>> states;  ///< empty unless requested
  std::vector<Scalar> l2norms;                ///< ||v - [v]||
  std::vector<Scalar> means;
  std::vector<Scalar> dissipation;            ///< ||D^{delta/2} G v||^2
  std::vector<Scalar> power;                  ///< (P_N G h, v)
  std::vector<Scalar> energy_residuals;
  ModelParams<Scalar> params;
  int cutoff = 0;
  Scalar dt = 0;
  int halvings = 0;
  SpectralField<Scalar> final_state;

  std::size_t size() const { return times.size(); }
};

using TrajectoryRecordd = TrajectoryRecord<double>;

template <typename Scalar = double>
struct SimulateOptions {
  Scalar T = 1;
  Scalar dt = Scalar(1e-3);
  int record_every = 1;
  bool store_states = false;
  bool nonlinear = true;
  bool damped = true;
  std::optional<Scalar> residual_tol;  ///< halve dt until the energy residual is below this
  int max_halvings = 4;
};

template <typename Scalar>
std::vector<Scalar> energy_residual(const TrajectoryRecord<Scalar>& record);

namespace detail {

template <typename Scalar>
TrajectoryRecord<Scalar> simulate_fixed(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                        const SpectralField<Scalar>& v0, const SimulateOptions<Scalar>& opt,
                                        const Forcing<Scalar>& forcing, Scalar dt_request) {
  long long steps = std::llround(opt.T / dt_request);
  Scalar dt = dt_request;
  if (steps < 1 || std::abs(Scalar(steps) * dt - opt.T) > Scalar(1e-12) * opt.T) {
    steps = std::max<long long>(1, static_cast<long long>(std::ceil(opt.T / dt_request)));
    dt = opt.T / Scalar(steps);
  }
  const int n = v0.cutoff();
  const Etdrk4<Scalar> stepper(table, p, n, dt, {opt.nonlinear, opt.damped});
  const Forcing<Scalar>* f = forcing ? &forcing : nullptr;

  TrajectoryRecord<Scalar> rec;
  rec.params = table.params();
  rec.cutoff = n;
  rec.dt = dt;
  const Scalar norm0 = l2_norm(v0);
  const Scalar bound = Scalar(1e6) * (f ? std::max(norm0, Scalar(1)) : norm0);

  auto record = [&](Scalar t, const CoeffVector<Scalar>& c) {
    CoeffVector<Scalar> fluct = c;
    fluct(n) = Complex<Scalar>(0);
    rec.times.push_back(t);
    rec.l2norms.push_back(l2_norm_raw(fluct));
    rec.means.push_back(c(n).real());
    rec.dissipation.push_back(stepper.dissipation(c));
    rec.power.push_back(stepper.power(c, t, f));
    if (opt.store_states) rec.states.emplace_back(c);
  };

  CoeffVector<Scalar> c = v0.coeffs();
  record(0, c);
  Scalar last_valid = 0;
  for (long long s = 1; s <= steps; ++s) {
    const Scalar t = Scalar(s - 1) * dt;
    c = stepper.step(c, t, f);
    const Scalar norm = l2_norm_raw(c);
    if (!std::isfinite(norm) || (norm > bound && norm > 0)) {
      throw BlowUpError(static_cast<double>(last_valid),
                        "trajectory left the blow-up ball after t = " + std::to_string(last_valid));
    }
    last_valid = Scalar(s) * dt;
    if (s % opt.record_every == 0 || s == steps) record(Scalar(s) * dt, c);
  }
  rec.final_state = SpectralField<Scalar>(c);
  if (rec.size() >= 3) rec.energy_residuals = energy_residual(rec);
  return rec;
}

}  // namespace detail

/// Integrates v_t + L v + P_N (v^2)_x = -P_N G D^delta G v + P_N G h from v0
/// up to T, recording diagnostics every `record_every` steps.
template <typename Scalar>
TrajectoryRecord<Scalar> simulate(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                  const SpectralField<Scalar>& v0, const SimulateOptions<Scalar>& opt,
                                  const Forcing<Scalar>& forcing = {}) {
  if (!(opt.T > 0)) throw Error(ErrorKind::InvalidConfig, "horizon T must be positive");
  if (opt.record_every < 1) throw Error(ErrorKind::InvalidConfig, "record_every must be at least 1");
  Scalar dt = opt.dt;
  for (int halving = 0;; ++halving) {
    TrajectoryRecord<Scalar> rec = detail::simulate_fixed(table, p, v0, opt, forcing, dt);
    rec.halvings = halving;
    if (!opt.residual_tol || halving >= opt.max_halvings || rec.energy_residuals.empty()) return rec;
    const Scalar worst = *std::max_element(rec.energy_residuals.begin(), rec.energy_residuals.end());
    if (worst <= *opt.residual_tol) return rec;
    dt /= 2;
  }
}

/// |d/dt (1/2)||v||^2 + ||D^{delta/2} G v||^2 - (P_N G h, v)| / ||v0||^2 at
/// every sample. The derivative uses fourth-order stencils (central inside,
/// one-sided at the ends); with fewer than five samples, second order.
template <typename Scalar>
std::vector<Scalar> energy_residual(const TrajectoryRecord<Scalar>& record) {
  const std::size_t n = record.size();
  if (n < 3) throw Error(ErrorKind::InvalidConfig, "energy residual needs at least three samples");
  std::vector<Scalar> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = record.l2norms[i] * record.l2norms[i] / 2;
  const Scalar h = record.times[1] - record.times[0];
  for (std::size_t i = 2; i < n; ++i) {
    if (std::abs((record.times[i] - record.times[i - 1]) - h) > Scalar(1e-9) * h) {
      throw Error(ErrorKind::InvalidConfig, "energy residual needs uniformly spaced samples");
    }
  }
  std::vector<Scalar> df(n);
  if (n < 5) {
    df[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) df[i] = (f[i + 1] - f[i - 1]) / (2 * h);
    df[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
  } else {
    df[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
    df[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
    for (std::size_t i = 2; i + 2 < n; ++i) {
      df[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
    }
    df[n - 2] = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) / (12 * h);
    df[n - 1] = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) / (12 * h);
  }
  const Scalar scale = record.l2norms[0] > 0 ? record.l2norms[0] * record.l2norms[0] : Scalar(1);
  std::vector<Scalar> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::abs(df[i] + record.dissipation[i] - record.power[i]) / scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decay fits

template <typename Scalar = double>
struct DecayFit {
  Scalar M = 0;
  Scalar lambda = 0;
  Scalar r_squared = 0;
  int samples = 0;
  bool truncated = false;  ///< window shortened because the norm underflowed
};

/// Least-squares line through log ||v(t)|| on [t0, t1]; lambda = -slope and
/// M = e^{intercept} / ||v(0)||.
template <typename Scalar>
DecayFit<Scalar> decay_fit(const std::vector<Scalar>& times, const std::vector<Scalar>& norms, Scalar t0,
                           Scalar t1) {
  DecayFit<Scalar> fit;
  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int count = 0;
  const Scalar floor = Scalar(1e3) * std::numeric_limits<Scalar>::min();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0 || times[i] > t1) continue;
    if (!(norms[i] > floor)) {
      fit.truncated = true;
      break;
    }
    const Scalar x = times[i], y = std::log(norms[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++count;
  }
  if (count < 2) throw Error(ErrorKind::NumericalDegeneracy, "decay fit window holds fewer than two samples");
  const Scalar c = Scalar(count);
  const Scalar vx = sxx - sx * sx / c, vy = syy - sy * sy / c, cxy = sxy - sx * sy / c;
  if (!(vx > 0)) throw Error(ErrorKind::NumericalDegeneracy, "decay fit window has zero length");
  const Scalar slope = cxy / vx;
  const Scalar intercept = (sy - slope * sx) / c;
  fit.lambda = -slope;
  fit.M = std::exp(intercept) / norms.front();
  fit.r_squared = vy > 0 ? cxy * cxy / (vx * vy) : Scalar(1);
  fit.samples = count;
  return fit;
}

template <typename Scalar>
DecayFit<Scalar> decay_fit(const TrajectoryRecord<Scalar>& record, Scalar t0, Scalar t1) {
  return decay_fit(record.times, record.l2norms, t0, t1);
}

}  // namespace dgb
