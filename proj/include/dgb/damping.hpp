#pragma once

// Gain profile g, the operator G(phi) = g (phi - int phi g), the localized
// damping G D^delta G and its split into the diagonal dissipation Dtilde
// (symbol d(k)), the off-diagonal remainder N1 and the mean-correction
// operator R.
//
// All operators act exactly on coefficient vectors: a field of cutoff N is
// mapped by G to cutoff N+K and by G D^delta G to cutoff N+2K, where K is the
// cutoff of g. Nothing is truncated until the caller asks for it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "dgb/error.hpp"
#include "dgb/spectral.hpp"

namespace dgb {

enum class BumpTruncation {
  Fejer,  ///< Cesaro weights 1 - |k|/(K+1); keeps g >= 0 exactly
  Sharp,  ///< plain cutoff at |k| <= K
};

template <typename Scalar = double>
class DampingProfile {
 public:
  DampingProfile(CoeffVector<Scalar> ghat, Scalar delta, bool global, Scalar a, Scalar b)
      : ghat_(std::move(ghat)), delta_(delta), global_(global), a_(a), b_(b) {}

  int cutoff() const { return band_of(ghat_.size()); }
  const CoeffVector<Scalar>& ghat() const { return ghat_; }
  Complex<Scalar> ghat(int k) const { return fourier::at(ghat_, k); }
  Scalar delta() const { return delta_; }
  bool is_global() const { return global_; }
  Scalar support_begin() const { return a_; }
  Scalar support_end() const { return b_; }

  /// d(k) = sum_l |l|^delta |ghat(l-k)|^2 for k != 0, d(0) = 0. The sum is
  /// finite because ghat vanishes beyond K.
  Scalar d(int k) const {
    if (k == 0) return 0;
    const int kg = cutoff();
    Scalar sum = 0;
    for (int j = -kg; j <= kg; ++j) sum += abs_pow(k + j, delta_) * std::norm(ghat_(j + kg));
    return sum;
  }

  RealVector<Scalar> d_table(int n) const {
    RealVector<Scalar> out(2 * n + 1);
    for (int k = -n; k <= n; ++k) out(k + n) = d(k);
    return out;
  }

 private:
  CoeffVector<Scalar> ghat_;
  Scalar delta_;
  bool global_;
  Scalar a_, b_;
};

using DampingProfiled = DampingProfile<double>;

/// g = 1/(2pi) everywhere.
template <typename Scalar = double>
DampingProfile<Scalar> make_profile_global(Scalar delta) {
  CoeffVector<Scalar> ghat(1);
  ghat(0) = Complex<Scalar>(1 / kTwoPi<Scalar>);
  return DampingProfile<Scalar>(std::move(ghat), delta, true, 0, kTwoPi<Scalar>);
}

/// Raised-cosine-squared bump c0 (1 + cos(2pi (x - xc)/(b - a)))^2 on (a, b),
/// sampled on `grid_m` points, truncated to K modes and rescaled so that
/// ghat(0) = 1/(2pi). Raises TruncationTooCoarse when the truncated g dips
/// below -1e-10 on the sampling grid.
template <typename Scalar = double>
DampingProfile<Scalar> make_profile_bump(Scalar a, Scalar b, int kg, int grid_m, Scalar delta,
                                         BumpTruncation truncation = BumpTruncation::Fejer) {
  if (!(a >= 0 && a < b && b <= kTwoPi<Scalar>)) {
    throw Error(ErrorKind::InvalidSupport, "bump support must satisfy 0 <= a < b <= 2pi");
  }
  if (kg < 0 || grid_m < 2 * kg + 1) {
    throw Error(ErrorKind::TruncationAliasing, "bump grid must have at least 2K+1 points");
  }
  const Scalar xc = (a + b) / 2, width = b - a;
  const auto samples = GridField<Scalar>::sample(grid_m, [&](Scalar x) {
    if (x <= a || x >= b) return Scalar(0);
    const Scalar c = 1 + std::cos(kTwoPi<Scalar> * (x - xc) / width);
    return c * c;
  });
  CoeffVector<Scalar> ghat = to_spectral(samples, kg).coeffs();
  if (truncation == BumpTruncation::Fejer) {
    for (int k = -kg; k <= kg; ++k) ghat(k + kg) *= Scalar(1) - Scalar(std::abs(k)) / Scalar(kg + 1);
  }
  if (!(ghat(kg).real() > 0)) {
    throw Error(ErrorKind::InvalidSupport, "bump has no mass on the sampling grid");
  }
  ghat *= (1 / kTwoPi<Scalar>) / ghat(kg).real();
  ghat(kg) = Complex<Scalar>(1 / kTwoPi<Scalar>);

  const auto values = to_grid_raw(ghat, grid_m).values();
  const Scalar lowest = values.minCoeff();
  if (lowest < Scalar(-1e-10)) {
    throw Error(ErrorKind::TruncationTooCoarse,
                "truncated gain dips to " + std::to_string(lowest) + " (budget -1e-10)");
  }
  return DampingProfile<Scalar>(std::move(ghat), delta, false, a, b);
}

/// g(x - shift): phases only, so d(k) is unchanged.
template <typename Scalar>
DampingProfile<Scalar> translated(const DampingProfile<Scalar>& p, Scalar shift) {
  CoeffVector<Scalar> ghat = p.ghat();
  const int kg = p.cutoff();
  for (int k = -kg; k <= kg; ++k) ghat(k + kg) *= std::polar(Scalar(1), -Scalar(k) * shift);
  return DampingProfile<Scalar>(std::move(ghat), p.delta(), p.is_global(),
                                p.support_begin() + shift, p.support_end() + shift);
}

// ---------------------------------------------------------------------------
// Raw operators on coefficient vectors

template <typename Scalar>
CoeffVector<Scalar> apply_G_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const Complex<Scalar> pair = fourier::pairing(v, p.ghat());
  CoeffVector<Scalar> out = fourier::convolve(p.ghat(), v);
  const int n = band_of(out.size());
  const int kg = p.cutoff();
  out.segment(n - kg, 2 * kg + 1) -= pair * p.ghat();
  return out;
}

template <typename Scalar>
CoeffVector<Scalar> apply_D_raw(const CoeffVector<Scalar>& v, Scalar order) {
  return fourier::multiply(v, [order](int k) { return abs_pow(k, order); });
}

template <typename Scalar>
CoeffVector<Scalar> apply_GDdeltaG_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  return apply_G_raw(p, apply_D_raw(apply_G_raw(p, v), p.delta()));
}

/// Output cutoff of the damping operators for an input of cutoff n.
template <typename Scalar>
int damping_band(const DampingProfile<Scalar>& p, int n) {
  return n + 2 * p.cutoff();
}

template <typename Scalar>
CoeffVector<Scalar> apply_Dtilde_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const int n = band_of(v.size());
  CoeffVector<Scalar> out = fourier::multiply(v, [&p](int k) { return p.d(k); });
  return fourier::rebanded(out, damping_band(p, n));
}

/// c(k) = sum_l sum_{n != k} |l|^delta ghat(k-l) ghat(l-n) vhat(n), k != 0,
/// evaluated as the literal double sum.
template <typename Scalar>
CoeffVector<Scalar> apply_N1_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const int n = band_of(v.size());
  const int kg = p.cutoff();
  const int nout = damping_band(p, n);
  const Scalar delta = p.delta();
  CoeffVector<Scalar> out = CoeffVector<Scalar>::Zero(2 * nout + 1);
  for (int k = -nout; k <= nout; ++k) {
    if (k == 0) continue;
    Complex<Scalar> ck(0);
    for (int l = k - kg; l <= k + kg; ++l) {
      const Scalar weight = abs_pow(l, delta);
      if (weight == 0) continue;
      Complex<Scalar> inner(0);
      const int lo = std::max(-n, l - kg), hi = std::min(n, l + kg);
      for (int m = lo; m <= hi; ++m) {
        if (m == k) continue;
        inner += p.ghat(l - m) * v(m + n);
      }
      ck += weight * p.ghat(k - l) * inner;
    }
    out(k + nout) = ck;
  }
  return out;
}

/// The four mean-correction terms
///   (1/2pi) int g D(gv) - (int gv) g D(g) - (int g D(gv)) g + (int gv)(int g D(g)) g,
/// with D = D^delta and every integral evaluated as a Fourier pairing.
template <typename Scalar>
CoeffVector<Scalar> apply_R_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const int n = band_of(v.size());
  const int nout = damping_band(p, n);
  const auto& g = p.ghat();
  const CoeffVector<Scalar> dgv = apply_D_raw(fourier::convolve(g, v), p.delta());
  const CoeffVector<Scalar> dg = apply_D_raw(g, p.delta());
  const Complex<Scalar> int_g_dgv = fourier::pairing(g, dgv);
  const Complex<Scalar> int_gv = fourier::pairing(g, v);
  const Complex<Scalar> int_g_dg = fourier::pairing(g, dg);

  CoeffVector<Scalar> out = CoeffVector<Scalar>::Zero(2 * nout + 1);
  out(nout) += int_g_dgv / kTwoPi<Scalar>;
  out -= int_gv * fourier::rebanded(CoeffVector<Scalar>(fourier::convolve(g, dg)), nout);
  const CoeffVector<Scalar> g_out = fourier::rebanded(g, nout);
  out -= int_g_dgv * g_out;
  out += int_gv * int_g_dg * g_out;
  return out;
}

// ---------------------------------------------------------------------------
// Field-level wrappers

/// G v, at cutoff N + K. The output has zero mean.
template <typename Scalar>
SpectralField<Scalar> apply_G(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(apply_G_raw(p, v.coeffs()));
}

/// G D^delta G v, at cutoff N + 2K.
template <typename Scalar>
SpectralField<Scalar> apply_GDdeltaG(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(apply_GDdeltaG_raw(p, v.coeffs()));
}

template <typename Scalar>
SpectralField<Scalar> apply_Dtilde(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(apply_Dtilde_raw(p, v.coeffs()));
}

template <typename Scalar>
SpectralField<Scalar> apply_N1(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(apply_N1_raw(p, v.coeffs()));
}

template <typename Scalar>
SpectralField<Scalar> apply_R(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(apply_R_raw(p, v.coeffs()));
}

/// ||G D^delta G v - (Dtilde + N1 + R) v|| / ||v||.
template <typename Scalar>
Scalar decomposition_residual(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const CoeffVector<Scalar> lhs = apply_GDdeltaG_raw(p, v);
  const CoeffVector<Scalar> rhs = apply_Dtilde_raw(p, v) + apply_N1_raw(p, v) + apply_R_raw(p, v);
  const Scalar scale = l2_norm_raw(v);
  if (scale == 0) return l2_norm_raw(CoeffVector<Scalar>(lhs - rhs));
  return l2_norm_raw(CoeffVector<Scalar>(lhs - rhs)) / scale;
}

/// Raises DecompositionBug when the split misses G D^delta G by more than tol.
template <typename Scalar>
Scalar check_decomposition(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v,
                           Scalar tol = Scalar(1e-10)) {
  const Scalar residual = decomposition_residual(p, v.coeffs());
  if (!(residual <= tol)) {
    throw Error(ErrorKind::DecompositionBug,
                "damping split residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return residual;
}

/// ||D^{delta/2} G v||^2: the instantaneous dissipation rate.
template <typename Scalar>
Scalar dissipation_rate_raw(const DampingProfile<Scalar>& p, const CoeffVector<Scalar>& v) {
  const Scalar n = l2_norm_raw(apply_D_raw(apply_G_raw(p, v), p.delta() / 2));
  return n * n;
}

template <typename Scalar>
Scalar dissipation_rate(const DampingProfile<Scalar>& p, const SpectralField<Scalar>& v) {
  return dissipation_rate_raw(p, v.coeffs());
}

/// min and max over 1 <= |k| <= N of d(k) / <k>^delta.
template <typename Scalar>
std::pair<Scalar, Scalar> lemma_d_equivalence(const DampingProfile<Scalar>& p, int n) {
  Scalar lo = std::numeric_limits<Scalar>::infinity(), hi = 0;
  for (int k = -n; k <= n; ++k) {
    if (k == 0) continue;
    const Scalar ratio = p.d(k) / std::pow(bracket(Scalar(k)), p.delta());
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!(lo > 0)) throw Error(ErrorKind::ProfileDegenerate, "d(k) vanishes for some k != 0");
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Matrices on a fixed band

/// Matrix of v -> G v from cutoff n (columns) to cutoff n + K (rows):
///   M(k, j) = ghat(k - j) - 2pi ghat(k) ghat(-j).
template <typename Scalar>
ComplexMatrix<Scalar> g_matrix(const DampingProfile<Scalar>& p, int n) {
  const int nout = n + p.cutoff();
  ComplexMatrix<Scalar> m(2 * nout + 1, 2 * n + 1);
  for (int k = -nout; k <= nout; ++k) {
    for (int j = -n; j <= n; ++j) {
      m(k + nout, j + n) = p.ghat(k - j) - kTwoPi<Scalar> * p.ghat(k) * p.ghat(-j);
    }
  }
  return m;
}

/// Matrix of P_n G D^delta G P_n, assembled as (D^{delta/2} G)^* (D^{delta/2} G)
/// so that it is Hermitian positive semidefinite by construction.
template <typename Scalar>
ComplexMatrix<Scalar> damping_matrix(const DampingProfile<Scalar>& p, int n) {
  ComplexMatrix<Scalar> half = g_matrix(p, n);
  const int nout = n + p.cutoff();
  for (int k = -nout; k <= nout; ++k) half.row(k + nout) *= abs_pow(k, p.delta() / 2);
  ComplexMatrix<Scalar> b = half.adjoint() * half;
  return Scalar(0.5) * (b + b.adjoint());
}

/// Matrix of P_n G P_n.
template <typename Scalar>
ComplexMatrix<Scalar> g_matrix_square(const DampingProfile<Scalar>& p, int n) {
  const int kg = p.cutoff();
  return g_matrix(p, n).middleRows(kg, 2 * n + 1);
}

}  // namespace dgb
