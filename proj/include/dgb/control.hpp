#pragma once

// Exact control and observability on the Fourier truncation: Gram matrices of
// exponentials and their biorthogonal families, minimum-norm Gramian control
// for the damped linear loop, the two-part control of the nonlinear equation
// with the global gain, and the observability constant of the closed loop.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgb/damping.hpp"
#include "dgb/dynamics.hpp"
#include "dgb/error.hpp"
#include "dgb/params.hpp"
#include "dgb/quadrature.hpp"
#include "dgb/spectral.hpp"
#include "dgb/symbols.hpp"

namespace dgb {

// ---------------------------------------------------------------------------
// Gram matrix of exponentials and the biorthogonal family

/// Gamma(j, k) = int_0^T exp(i (lambda_j - lambda_k) t) dt.
template <typename Scalar>
ComplexMatrix<Scalar> gram_matrix(const SymbolTable<Scalar>& table, const std::vector<int>& modes, Scalar T) {
  if (!(T > 0)) throw Error(ErrorKind::InvalidConfig, "horizon T must be positive");
  const int size = static_cast<int>(modes.size());
  for (int i = 0; i < size; ++i) {
    if (std::abs(modes[i]) > table.cutoff()) throw Error(ErrorKind::InvalidConfig, "mode outside the symbol table");
    for (int j = 0; j < i; ++j) {
      if (table.lambda(modes[i]) == table.lambda(modes[j])) {
        throw Error(ErrorKind::DegenerateGramian, "modes " + std::to_string(modes[j]) + " and " +
                                                      std::to_string(modes[i]) +
                                                      " share an eigenvalue; keep one per class");
      }
    }
  }
  ComplexMatrix<Scalar> gamma(size, size);
  for (int j = 0; j < size; ++j) {
    for (int k = 0; k < size; ++k) {
      const Scalar diff = table.lambda(modes[j]) - table.lambda(modes[k]);
      gamma(j, k) = j == k ? Complex<Scalar>(T)
                           : (std::exp(Complex<Scalar>(0, diff * T)) - Scalar(1)) / Complex<Scalar>(0, diff);
    }
  }
  return gamma;
}

template <typename Scalar>
Scalar condition_number(const ComplexMatrix<Scalar>& m) {
  Eigen::JacobiSVD<ComplexMatrix<Scalar>> svd(m);
  const auto& s = svd.singularValues();
  const Scalar smallest = s(s.size() - 1);
  return smallest > 0 ? s(0) / smallest : std::numeric_limits<Scalar>::infinity();
}

/// q_j(t) = sum_k c(j, k) exp(-i lambda_k t).
template <typename Scalar = double>
struct BiorthogonalFamily {
  std::vector<int> modes;
  std::vector<Scalar> lambdas;
  Scalar T = 0;
  ComplexMatrix<Scalar> coefficients;
  Scalar condition = 0;

  Complex<Scalar> q(int j, Scalar t) const {
    Complex<Scalar> sum(0);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      sum += coefficients(j, static_cast<Eigen::Index>(k)) * std::exp(Complex<Scalar>(0, -lambdas[k] * t));
    }
    return sum;
  }
};

/// c = conj(Gamma^{-1}), so that int_0^T exp(-i lambda_k t) conj(q_j(t)) dt = delta_jk.
template <typename Scalar>
BiorthogonalFamily<Scalar> biorthogonal_family(const SymbolTable<Scalar>& table, const std::vector<int>& modes,
                                               Scalar T) {
  const ComplexMatrix<Scalar> gamma = gram_matrix(table, modes, T);
  BiorthogonalFamily<Scalar> family;
  family.modes = modes;
  family.T = T;
  for (int k : modes) family.lambdas.push_back(table.lambda(k));
  family.condition = condition_number(gamma);
  if (!(family.condition <= Scalar(1e12))) {
    std::ostringstream os;
    os << "Gram matrix condition number " << family.condition
       << " exceeds 1e12; use a longer horizon or fewer modes";
    throw Error(ErrorKind::IllPosedHorizon, os.str());
  }
  family.coefficients = gamma.inverse().conjugate();
  return family;
}

/// P(j, k) = int_0^T exp(-i lambda_k t) conj(q_j(t)) dt by composite Gauss-Legendre.
template <typename Scalar>
ComplexMatrix<Scalar> pairing_matrix(const BiorthogonalFamily<Scalar>& family, int panels = 256, int order = 10) {
  const auto [nodes, weights] = composite_gauss_legendre<Scalar>(0, family.T, panels, order);
  const int size = static_cast<int>(family.modes.size());
  ComplexMatrix<Scalar> out = ComplexMatrix<Scalar>::Zero(size, size);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Scalar t = nodes[i];
    for (int j = 0; j < size; ++j) {
      const Complex<Scalar> qj = std::conj(family.q(j, t));
      for (int k = 0; k < size; ++k) {
        out(j, k) += weights[i] * std::exp(Complex<Scalar>(0, -family.lambdas[k] * t)) * qj;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gramians of the truncated loop

/// int_0^T e^{A s} Q e^{A^* s} ds with A = V D V^{-1}:
/// V [ (V^{-1} Q V^{-*})_{ij} T phi1((D_i + conj D_j) T) ] V^*.
template <typename Scalar>
ComplexMatrix<Scalar> controllability_gramian(const LinearClosedLoop<Scalar>& loop, const ComplexMatrix<Scalar>& q,
                                              Scalar T) {
  const auto& v = loop.eigenvectors;
  const auto& vinv = loop.eigenvectors_inverse;
  ComplexMatrix<Scalar> m = vinv * q * vinv.adjoint();
  const auto& d = loop.eigenvalues;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) *= T * phi_functions<Scalar>((d(i) + std::conj(d(j))) * T).phi1;
    }
  }
  ComplexMatrix<Scalar> w = v * m * v.adjoint();
  return Scalar(0.5) * (w + w.adjoint());
}

/// int_0^T e^{A^* s} Q e^{A s} ds.
template <typename Scalar>
ComplexMatrix<Scalar> observability_gramian(const LinearClosedLoop<Scalar>& loop, const ComplexMatrix<Scalar>& q,
                                            Scalar T) {
  const auto& v = loop.eigenvectors;
  const auto& vinv = loop.eigenvectors_inverse;
  ComplexMatrix<Scalar> m = v.adjoint() * q * v;
  const auto& d = loop.eigenvalues;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) *= T * phi_functions<Scalar>((std::conj(d(i)) + d(j)) * T).phi1;
    }
  }
  ComplexMatrix<Scalar> o = vinv.adjoint() * m * vinv;
  return Scalar(0.5) * (o + o.adjoint());
}

/// Same integral by composite Gauss-Legendre with matrix exponentials at the nodes.
template <typename Scalar>
ComplexMatrix<Scalar> observability_gramian_quadrature(const LinearClosedLoop<Scalar>& loop,
                                                       const ComplexMatrix<Scalar>& q, Scalar T, int panels,
                                                       int order = 8) {
  const auto [nodes, weights] = composite_gauss_legendre<Scalar>(0, T, panels, order);
  ComplexMatrix<Scalar> o = ComplexMatrix<Scalar>::Zero(q.rows(), q.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const ComplexMatrix<Scalar> w = loop.transition(nodes[i]);
    o += weights[i] * (w.adjoint() * q * w);
  }
  return Scalar(0.5) * (o + o.adjoint());
}

// ---------------------------------------------------------------------------
// Control problems

template <typename Scalar = double>
struct ControlProblem {
  ModelParams<Scalar> params;
  DampingProfile<Scalar> profile = make_profile_global<Scalar>(Scalar(1));
  int cutoff = 16;
  Scalar T = 1;
  SpectralField<Scalar> v0, v1;
  Scalar s = 0;  ///< Sobolev index of the reported control norm
};

template <typename Scalar = double>
struct ControlOptions {
  Scalar certify_dt = Scalar(1e-5);
  int certify_cutoff = 0;          ///< 0: certify at the problem cutoff
  int samples = 201;               ///< exported samples of h on [0, T]
  Scalar tolerance = Scalar(1e-6); ///< nonlinear certification threshold
};

template <typename Scalar = double>
struct ControlSolution {
  std::string method;
  std::vector<Scalar> times;
  std::vector<CoeffVector<Scalar>> h;  ///< control coefficients at `times`
  Forcing<Scalar> control;             ///< h as a function of t
  Scalar control_norm = 0;             ///< ||h||_{L2(0,T; H^s)}
  Scalar terminal_error = 0;
  Scalar gramian_min_eig = 0;
  Scalar gramian_condition = 0;
  Scalar eigenvector_condition = 1;
  SpectralField<Scalar> final_state;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename Scalar>
void check_endpoints(const ControlProblem<Scalar>& problem) {
  if (!(problem.T > 0)) throw Error(ErrorKind::InvalidConfig, "horizon T must be positive");
  if (problem.cutoff < 1) throw Error(ErrorKind::InvalidConfig, "cutoff must be positive");
  const Scalar m0 = mean(problem.v0), m1 = mean(problem.v1);
  if (std::abs(m0 - m1) > Scalar(1e-12) * std::max(Scalar(1), std::abs(m0))) {
    throw Error(ErrorKind::InvalidConfig, "endpoints must have equal means");
  }
}

template <typename Scalar>
std::vector<std::string> endpoint_decay_warnings(const ControlProblem<Scalar>& problem) {
  std::vector<std::string> out;
  const int n = problem.cutoff;
  const int tail = std::max(1, (3 * n) / 4);
  auto check = [&](const SpectralField<Scalar>& v, const char* name) {
    const CoeffVector<Scalar> c = v.rebanded(n).coeffs();
    Scalar total = c.squaredNorm(), high = 0;
    for (int k = -n; k <= n; ++k) {
      if (std::abs(k) > tail) high += std::norm(c(k + n));
    }
    if (total > 0 && high > Scalar(1e-10) * total) {
      out.push_back(std::string(name) + " spectrum does not decay within the band");
    }
  };
  check(problem.v0, "v0");
  check(problem.v1, "v1");
  return out;
}

/// Minimum-norm steering on a linear loop: h(t) = Bc^* e^{A^*(T-t)} xi with
/// W_T xi = x1 - e^{AT} x0. Also returns the controlled linear trajectory.
template <typename Scalar>
struct GramianSteering {
  LinearClosedLoop<Scalar> loop;
  ComplexMatrix<Scalar> bc;
  ComplexMatrix<Scalar> gramian;
  CoeffVector<Scalar> xi;
  ComplexMatrix<Scalar> h_map;  ///< Bc^* V^{-*}
  CoeffVector<Scalar> w;        ///< V^* xi
  ComplexMatrix<Scalar> m;      ///< V^{-1} Bc Bc^* V^{-*}
  CoeffVector<Scalar> x0_modal; ///< V^{-1} x0
  std::vector<std::pair<Eigen::Index, Eigen::Index>> support;  ///< nonzero entries of m
  Scalar T = 0;
  Scalar mean = 0;
  Scalar min_eig = 0, condition = 0;

  CoeffVector<Scalar> control(Scalar t) const {
    const auto& d = loop.eigenvalues;
    CoeffVector<Scalar> z(w.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std::exp(std::conj(d(i)) * (T - t)) * w(i);
    return unpack_mean_zero<Scalar>(h_map * z);
  }

  /// Linear trajectory at time t, closed form in the eigenbasis.
  CoeffVector<Scalar> state(Scalar t) const {
    const auto& d = loop.eigenvalues;
    const Eigen::Index n = d.size();
    CoeffVector<Scalar> z(n), y(n);
    for (Eigen::Index j = 0; j < n; ++j) z(j) = std::exp(std::conj(d(j)) * (T - t)) * w(j);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = std::exp(d(i) * t) * x0_modal(i);
    for (const auto& [i, j] : support) {
      y(i) += m(i, j) * t * phi_functions<Scalar>((d(i) + std::conj(d(j))) * t).phi1 * z(j);
    }
    return unpack_mean_zero<Scalar>(loop.eigenvectors * y, mean);
  }
};

template <typename Scalar>
GramianSteering<Scalar> gramian_steering(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p, int n,
                                         Scalar T, const SpectralField<Scalar>& v0, const SpectralField<Scalar>& v1,
                                         bool damped) {
  GramianSteering<Scalar> s;
  s.T = T;
  s.loop = build_closed_loop(table, p, n, damped);
  s.bc = mean_zero_block(g_matrix_square(p, n));
  const ComplexMatrix<Scalar> q = s.bc * s.bc.adjoint();
  s.gramian = controllability_gramian(s.loop, q, T);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> eig(s.gramian);
  const auto& ev = eig.eigenvalues();
  s.min_eig = ev(0);
  s.condition = ev(ev.size() - 1) / ev(0);
  if (!(ev(0) > Scalar(1e-14) * ev(ev.size() - 1))) {
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    std::ostringstream os;
    os << "controllability Gramian is singular (lambda_min = " << ev(0)
       << "); deficient direction concentrated on mode " << mean_zero_mode(static_cast<int>(worst), n);
    throw Error(ErrorKind::Uncontrollable, os.str());
  }
  const CoeffVector<Scalar> c0 = v0.rebanded(n).coeffs(), c1 = v1.rebanded(n).coeffs();
  s.mean = c0(n).real();
  const CoeffVector<Scalar> x0 = pack_mean_zero(c0);
  const CoeffVector<Scalar> defect = pack_mean_zero(c1) - s.loop.transition(T) * x0;
  s.xi = eig.eigenvectors() * (ev.cwiseInverse().asDiagonal() * (eig.eigenvectors().adjoint() * defect));
  s.h_map = s.bc.adjoint() * s.loop.eigenvectors_inverse.adjoint();
  s.w = s.loop.eigenvectors.adjoint() * s.xi;
  s.m = s.loop.eigenvectors_inverse * q * s.loop.eigenvectors_inverse.adjoint();
  s.x0_modal = s.loop.eigenvectors_inverse * x0;
  for (Eigen::Index j = 0; j < s.m.cols(); ++j) {
    for (Eigen::Index i = 0; i < s.m.rows(); ++i) {
      if (s.m(i, j) != Complex<Scalar>(0)) s.support.emplace_back(i, j);
    }
  }
  return s;
}

template <typename Scalar>
Scalar control_norm(const Forcing<Scalar>& h, Scalar T, Scalar s) {
  const auto [nodes, weights] = composite_gauss_legendre<Scalar>(0, T, 64, 8);
  Scalar sum = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Scalar norm = sobolev_norm_raw(CoeffVector<Scalar>(h(nodes[i])), s);
    sum += weights[i] * norm * norm;
  }
  return std::sqrt(sum);
}

template <typename Scalar>
void sample_control(ControlSolution<Scalar>& sol, Scalar T, int samples) {
  samples = std::max(samples, 2);
  for (int i = 0; i < samples; ++i) {
    const Scalar t = T * Scalar(i) / Scalar(samples - 1);
    sol.times.push_back(t);
    sol.h.push_back(sol.control(t));
  }
}

template <typename Scalar>
Scalar relative_terminal_error(const SpectralField<Scalar>& reached, const SpectralField<Scalar>& target) {
  const int n = std::max(reached.cutoff(), target.cutoff());
  const Scalar err = l2_norm(reached.rebanded(n) - target.rebanded(n));
  return err / std::max(l2_norm(target), Scalar(1e-12));
}

}  // namespace detail

/// Minimum-norm control of the damped linear loop with actuation P_N G P_N,
/// certified by integrating the loop with ETDRK4 under the synthesized h.
template <typename Scalar>
ControlSolution<Scalar> linear_control_gramian(const ControlProblem<Scalar>& problem,
                                               const ControlOptions<Scalar>& options = {}) {
  validate(problem.params);
  detail::check_endpoints(problem);
  const int n = problem.cutoff;
  const SymbolTable<Scalar> table(problem.params, n);
  auto steering = std::make_shared<detail::GramianSteering<Scalar>>(
      detail::gramian_steering(table, problem.profile, n, problem.T, problem.v0, problem.v1, true));

  ControlSolution<Scalar> sol;
  sol.method = "gramian";
  sol.warnings = detail::endpoint_decay_warnings(problem);
  sol.control = [steering](Scalar t) { return steering->control(t); };
  sol.gramian_min_eig = steering->min_eig;
  sol.gramian_condition = steering->condition;
  sol.eigenvector_condition = steering->loop.eigenvector_condition;
  sol.control_norm = problem.s == 0
                         ? std::sqrt(kTwoPi<Scalar> * std::max(Scalar(0), steering->xi.dot(steering->gramian * steering->xi).real()))
                         : detail::control_norm(sol.control, problem.T, problem.s);
  detail::sample_control(sol, problem.T, options.samples);

  SimulateOptions<Scalar> sim;
  sim.T = problem.T;
  sim.dt = options.certify_dt;
  sim.nonlinear = false;
  sim.damped = true;
  sim.record_every = std::numeric_limits<int>::max();
  const auto rec = simulate(table, problem.profile, problem.v0.rebanded(n), sim, sol.control);
  sol.final_state = rec.final_state;
  sol.terminal_error = detail::relative_terminal_error(rec.final_state, problem.v1);
  return sol;
}

/// Two-part control of u_t + L u + (u^2)_x = G h with g = 1/(2pi): h1 steers
/// the undamped linear equation, h2 = 2pi (u^2)_x along the linear path
/// cancels the nonlinearity. Certified by integrating the nonlinear equation.
template <typename Scalar>
ControlSolution<Scalar> nonlinear_control_global(const ControlProblem<Scalar>& problem,
                                                 const ControlOptions<Scalar>& options = {}) {
  validate(problem.params);
  detail::check_endpoints(problem);
  if (!problem.profile.is_global()) {
    throw Error(ErrorKind::InvalidConfig, "nonlinear control is only available for the global gain g = 1/(2pi)");
  }
  const int n = problem.cutoff;
  const int nc = options.certify_cutoff > 0 ? options.certify_cutoff : n;
  const SymbolTable<Scalar> table(problem.params, std::max(n, nc));
  auto steering = std::make_shared<detail::GramianSteering<Scalar>>(
      detail::gramian_steering(table, problem.profile, n, problem.T, problem.v0, problem.v1, false));

  ControlSolution<Scalar> sol;
  sol.method = "nonlinear-global";
  sol.warnings = detail::endpoint_decay_warnings(problem);
  sol.control = [steering](Scalar t) {
    const CoeffVector<Scalar> u = steering->state(t);
    return CoeffVector<Scalar>(steering->control(t) + kTwoPi<Scalar> * nonlinear_term_raw(u));
  };
  sol.gramian_min_eig = steering->min_eig;
  sol.gramian_condition = steering->condition;
  sol.eigenvector_condition = steering->loop.eigenvector_condition;
  sol.control_norm = detail::control_norm(sol.control, problem.T, problem.s);
  detail::sample_control(sol, problem.T, options.samples);

  SimulateOptions<Scalar> sim;
  sim.T = problem.T;
  sim.dt = options.certify_dt;
  sim.nonlinear = true;
  sim.damped = false;
  sim.record_every = std::numeric_limits<int>::max();
  const auto rec = simulate(table, problem.profile, problem.v0.rebanded(nc), sim, sol.control);
  sol.final_state = rec.final_state;
  sol.terminal_error = detail::relative_terminal_error(rec.final_state, problem.v1);
  if (!(sol.terminal_error <= options.tolerance)) {
    std::ostringstream os;
    os << "nonlinear certification error " << sol.terminal_error << " exceeds " << options.tolerance
       << "; increase the cutoff";
    throw Error(ErrorKind::ResolutionInsufficient, os.str());
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Observability

template <typename Scalar = double>
struct ObservabilityResult {
  Scalar cobs = 0;
  SpectralField<Scalar> worst_mode;
  Scalar min_eig = 0;
  Scalar contraction = 0;       ///< ||W(T) v*||^2 / ||v*||^2
  Scalar contraction_bound = 0; ///< 1 - 2 / Cobs
  bool certified = false;
};

/// Cobs = 1 / lambda_min(O_T) with O_T = int_0^T W(t)^* B W(t) dt, so that
/// ||v0||^2 <= Cobs int_0^T ||D^{delta/2} G v||^2 dt on the truncation.
template <typename Scalar>
ObservabilityResult<Scalar> observability_constant(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                                   Scalar T, int n) {
  if (!(T > 0)) throw Error(ErrorKind::InvalidConfig, "horizon T must be positive");
  const auto loop = build_closed_loop(table, p, n, true);
  const ComplexMatrix<Scalar> gramian = observability_gramian(loop, loop.damping, T);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> eig(gramian);
  ObservabilityResult<Scalar> out;
  out.min_eig = eig.eigenvalues()(0);
  if (!(out.min_eig > 0)) {
    throw Error(ErrorKind::ObservabilityFailure, "observability Gramian is not positive definite");
  }
  out.cobs = 1 / out.min_eig;

  // The operator is real, so its eigenspaces are closed under v(k) -> conj(v(-k)).
  const CoeffVector<Scalar> e = eig.eigenvectors().col(0);
  const int dim = 2 * n;
  CoeffVector<Scalar> flipped(dim);
  for (int i = 0; i < dim; ++i) flipped(i) = std::conj(e(dim - 1 - i));
  CoeffVector<Scalar> real_part = e + flipped;
  if (real_part.norm() < Scalar(1e-6)) real_part = Complex<Scalar>(0, 1) * (e - flipped);
  real_part /= real_part.norm();
  out.worst_mode = SpectralField<Scalar>(unpack_mean_zero<Scalar>(real_part), Scalar(1e-8));

  const CoeffVector<Scalar> x = pack_mean_zero(out.worst_mode.coeffs());
  const CoeffVector<Scalar> wx = loop.transition(T) * x;
  out.contraction = wx.squaredNorm() / x.squaredNorm();
  out.contraction_bound = 1 - 2 / out.cobs;
  out.certified = out.contraction <= out.contraction_bound + Scalar(1e-10);
  return out;
}

template <typename Scalar = double>
struct DecayPrediction {
  Scalar gamma_gramian = 0;
  Scalar gamma_abscissa = 0;
  Scalar cobs = 0;
};

/// gamma from one observability period, -log(1 - 2/Cobs)/(2T), next to the
/// asymptotic rate -max Re spec(A).
template <typename Scalar>
DecayPrediction<Scalar> decay_rate_predict(const SymbolTable<Scalar>& table, const DampingProfile<Scalar>& p,
                                           Scalar T, int n) {
  const auto obs = observability_constant(table, p, T, n);
  const auto loop = build_closed_loop(table, p, n, true);
  DecayPrediction<Scalar> out;
  out.cobs = obs.cobs;
  out.gamma_gramian = -std::log(1 - 2 / obs.cobs) / (2 * T);
  out.gamma_abscissa = -loop.spectral_abscissa;
  return out;
}

}  // namespace dgb
