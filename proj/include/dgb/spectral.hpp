#pragma once

// Truncated Fourier representation of real 2*pi-periodic functions.
//
// A field of cutoff N stores the coefficients vhat(k), |k| <= N, of
//   v(x) = sum_k vhat(k) exp(i k x),
// with vhat(k) = (1/2pi) int v exp(-ikx) dx. Coefficient vectors are indexed
// k + N. Raw coefficient vectors (CoeffVector) carry no symmetry requirement
// and are used to assemble operator matrices; SpectralField enforces the
// Hermitian symmetry of a real function.

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "dgb/error.hpp"

namespace dgb {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using CoeffVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

template <typename Scalar>
inline constexpr Scalar kTwoPi = Scalar(2) * std::numbers::pi_v<Scalar>;

/// |k|^p with the multiplier convention 0^p = 0.
template <typename Scalar>
Scalar abs_pow(int k, Scalar p) {
  if (k == 0) return Scalar(0);
  return std::pow(static_cast<Scalar>(std::abs(k)), p);
}

/// Japanese bracket <x> = (1 + x^2)^(1/2).
template <typename Scalar>
Scalar bracket(Scalar x) {
  return std::sqrt(Scalar(1) + x * x);
}

inline int band_of(Eigen::Index size) { return static_cast<int>((size - 1) / 2); }

namespace fourier {

template <typename Scalar>
Complex<Scalar> at(const CoeffVector<Scalar>& c, int k) {
  const int n = band_of(c.size());
  if (k < -n || k > n) return Complex<Scalar>(0);
  return c(k + n);
}

/// Zero-pads or truncates to cutoff `cutoff`.
template <typename Scalar>
CoeffVector<Scalar> rebanded(const CoeffVector<Scalar>& c, int cutoff) {
  const int n = band_of(c.size());
  CoeffVector<Scalar> out = CoeffVector<Scalar>::Zero(2 * cutoff + 1);
  const int m = std::min(n, cutoff);
  out.segment(cutoff - m, 2 * m + 1) = c.segment(n - m, 2 * m + 1);
  return out;
}

/// Coefficients of the pointwise product: (ab)^(k) = sum_j a(k-j) b(j).
/// The result has cutoff Na + Nb and is exact.
template <typename Scalar>
CoeffVector<Scalar> convolve(const CoeffVector<Scalar>& a, const CoeffVector<Scalar>& b) {
  const int na = band_of(a.size());
  const int nb = band_of(b.size());
  const int n = na + nb;
  CoeffVector<Scalar> out = CoeffVector<Scalar>::Zero(2 * n + 1);
  for (int j = -nb; j <= nb; ++j) {
    const Complex<Scalar> bj = b(j + nb);
    if (bj == Complex<Scalar>(0)) continue;
    // k - j runs over [-na, na], so k runs over [j - na, j + na].
    out.segment(j - na + n, 2 * na + 1) += bj * a;
  }
  return out;
}

/// int_T f h dx = 2*pi * sum_k fhat(k) hhat(-k).
template <typename Scalar>
Complex<Scalar> pairing(const CoeffVector<Scalar>& f, const CoeffVector<Scalar>& h) {
  const int nf = band_of(f.size());
  const int nh = band_of(h.size());
  const int n = std::min(nf, nh);
  Complex<Scalar> sum(0);
  for (int k = -n; k <= n; ++k) sum += f(k + nf) * h(-k + nh);
  return kTwoPi<Scalar> * sum;
}

/// L2 inner product (u, v) = 2*pi * sum_k uhat(k) conj(vhat(k)).
template <typename Scalar>
Complex<Scalar> inner(const CoeffVector<Scalar>& u, const CoeffVector<Scalar>& v) {
  const int nu = band_of(u.size());
  const int nv = band_of(v.size());
  const int n = std::min(nu, nv);
  return kTwoPi<Scalar> * v.segment(nv - n, 2 * n + 1).dot(u.segment(nu - n, 2 * n + 1));
}

template <typename Scalar, typename Symbol>
CoeffVector<Scalar> multiply(const CoeffVector<Scalar>& c, Symbol&& symbol) {
  const int n = band_of(c.size());
  CoeffVector<Scalar> out(c.size());
  for (int k = -n; k <= n; ++k) out(k + n) = Complex<Scalar>(symbol(k)) * c(k + n);
  return out;
}

/// Replaces c(k), c(-k) by the nearest conjugate pair and drops the imaginary part of c(0).
template <typename Scalar>
void make_hermitian(CoeffVector<Scalar>& c) {
  const int n = band_of(c.size());
  for (int k = 1; k <= n; ++k) {
    const Complex<Scalar> avg = Scalar(0.5) * (c(n + k) + std::conj(c(n - k)));
    c(n + k) = avg;
    c(n - k) = std::conj(avg);
  }
  c(n) = Complex<Scalar>(c(n).real(), 0);
}

/// Largest |c(k) - conj(c(-k))| over the band.
template <typename Scalar>
Scalar hermitian_defect(const CoeffVector<Scalar>& c) {
  const int n = band_of(c.size());
  Scalar defect = std::abs(c(n).imag());
  for (int k = 1; k <= n; ++k) defect = std::max(defect, std::abs(c(n + k) - std::conj(c(n - k))));
  return defect;
}

/// Smallest power of two >= m.
inline int next_pow2(int m) {
  int p = 1;
  while (p < m) p <<= 1;
  return p;
}

}  // namespace fourier

/// Real periodic function sampled on x_j = 2*pi*j/M.
template <typename Scalar = double>
class GridField {
 public:
  GridField() = default;
  explicit GridField(RealVector<Scalar> values) : values_(std::move(values)) {}

  template <typename F>
  static GridField sample(int m, F&& f) {
    RealVector<Scalar> values(m);
    for (int j = 0; j < m; ++j) values(j) = f(point(m, j));
    return GridField(std::move(values));
  }

  static Scalar point(int m, int j) { return kTwoPi<Scalar> * Scalar(j) / Scalar(m); }

  int size() const { return static_cast<int>(values_.size()); }
  const RealVector<Scalar>& values() const { return values_; }
  Scalar operator()(int j) const { return values_(j); }

 private:
  RealVector<Scalar> values_;
};

/// Truncated Fourier series of a real function; Hermitian by construction.
template <typename Scalar = double>
class SpectralField {
 public:
  using Coeffs = CoeffVector<Scalar>;

  SpectralField() : SpectralField(0) {}
  explicit SpectralField(int cutoff) : coeffs_(Coeffs::Zero(2 * cutoff + 1)) {}

  /// Validates symmetry to `tol` (relative to the largest coefficient) and
  /// then enforces it exactly.
  explicit SpectralField(Coeffs coeffs, Scalar tol = Scalar(1e-12)) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() % 2 == 0) {
      throw Error(ErrorKind::HermitianViolation, "coefficient vector must have odd length 2N+1");
    }
    const Scalar scale = std::max(Scalar(1), coeffs_.cwiseAbs().maxCoeff());
    if (fourier::hermitian_defect(coeffs_) > tol * scale) {
      throw Error(ErrorKind::HermitianViolation, "coefficients are not those of a real field");
    }
    fourier::make_hermitian(coeffs_);
  }

  /// Field with the given (k, vhat(k)) entries, k >= 0; the -k entries are
  /// filled by conjugation.
  static SpectralField from_modes(int cutoff,
                                  std::initializer_list<std::pair<int, Complex<Scalar>>> modes) {
    Coeffs c = Coeffs::Zero(2 * cutoff + 1);
    for (const auto& [k, value] : modes) {
      if (std::abs(k) > cutoff) continue;
      c(cutoff + k) = value;
      c(cutoff - k) = std::conj(value);
    }
    c(cutoff) = Complex<Scalar>(c(cutoff).real(), 0);
    return SpectralField(std::move(c));
  }

  static SpectralField constant(int cutoff, Scalar value) {
    return from_modes(cutoff, {{0, Complex<Scalar>(value)}});
  }

  /// amplitude * cos(mode x)
  static SpectralField cosine(int cutoff, int mode, Scalar amplitude) {
    if (mode == 0) return constant(cutoff, amplitude);
    return from_modes(cutoff, {{mode, Complex<Scalar>(amplitude / 2)}});
  }

  /// amplitude * sin(mode x)
  static SpectralField sine(int cutoff, int mode, Scalar amplitude) {
    return from_modes(cutoff, {{mode, Complex<Scalar>(0, -amplitude / 2)}});
  }

  int cutoff() const { return band_of(coeffs_.size()); }
  const Coeffs& coeffs() const { return coeffs_; }

  /// vhat(k); zero outside the band.
  Complex<Scalar> operator[](int k) const { return fourier::at(coeffs_, k); }

  SpectralField rebanded(int cutoff) const {
    SpectralField out;
    out.coeffs_ = fourier::rebanded(coeffs_, cutoff);
    return out;
  }

  friend SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    const int n = std::max(a.cutoff(), b.cutoff());
    SpectralField out;
    out.coeffs_ = fourier::rebanded(a.coeffs_, n) + fourier::rebanded(b.coeffs_, n);
    return out;
  }
  friend SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    return a + Scalar(-1) * b;
  }
  friend SpectralField operator*(Scalar s, const SpectralField& a) {
    SpectralField out;
    out.coeffs_ = s * a.coeffs_;
    return out;
  }

 private:
  Coeffs coeffs_;
};

using SpectralFieldd = SpectralField<double>;
using GridFieldd = GridField<double>;

/// Discrete Fourier analysis of grid values, truncated to |k| <= cutoff.
template <typename Scalar>
SpectralField<Scalar> to_spectral(const GridField<Scalar>& g, int cutoff) {
  const int m = g.size();
  if (m < 2 * cutoff + 1) {
    throw Error(ErrorKind::TruncationAliasing,
                "grid of " + std::to_string(m) + " points cannot resolve cutoff " +
                    std::to_string(cutoff) + " (need M >= 2N+1)");
  }
  std::vector<Complex<Scalar>> time(m), freq;
  for (int j = 0; j < m; ++j) time[j] = Complex<Scalar>(g(j), 0);
  Eigen::FFT<Scalar> fft;
  fft.fwd(freq, time);
  CoeffVector<Scalar> c(2 * cutoff + 1);
  for (int k = -cutoff; k <= cutoff; ++k) c(k + cutoff) = freq[(k + m) % m] / Scalar(m);
  fourier::make_hermitian(c);
  return SpectralField<Scalar>(std::move(c));
}

/// Point values on an M-point grid. Raises HermitianViolation when the
/// synthesized values carry an imaginary residue above 1e-12 (relative).
template <typename Scalar>
GridField<Scalar> to_grid_raw(const CoeffVector<Scalar>& c, int m) {
  const int n = band_of(c.size());
  if (m < 2 * n + 1) {
    throw Error(ErrorKind::TruncationAliasing, "grid too coarse for the field's cutoff (need M >= 2N+1)");
  }
  std::vector<Complex<Scalar>> freq(m, Complex<Scalar>(0)), time;
  for (int k = -n; k <= n; ++k) freq[(k + m) % m] = c(k + n);
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::Unscaled);
  fft.inv(time, freq);
  RealVector<Scalar> values(m);
  Scalar residue = 0, scale = 0;
  for (int j = 0; j < m; ++j) {
    values(j) = time[j].real();
    residue = std::max(residue, std::abs(time[j].imag()));
    scale = std::max(scale, std::abs(time[j]));
  }
  if (residue > Scalar(1e-12) * std::max(Scalar(1), scale)) {
    throw Error(ErrorKind::HermitianViolation, "synthesized grid values are not real");
  }
  return GridField<Scalar>(std::move(values));
}

template <typename Scalar>
GridField<Scalar> to_grid(const SpectralField<Scalar>& v, int m) {
  return to_grid_raw(v.coeffs(), m);
}

/// Evaluates the series at a single point by direct summation.
template <typename Scalar>
Scalar evaluate(const SpectralField<Scalar>& v, Scalar x) {
  const int n = v.cutoff();
  Complex<Scalar> sum = v[0];
  for (int k = 1; k <= n; ++k) sum += Scalar(2) * v[k] * std::polar(Scalar(1), Scalar(k) * x);
  return sum.real();
}

/// out(k) = symbol(k) * v(k). The output stays real only when
/// symbol(-k) == conj(symbol(k)); otherwise a HermitianViolation is raised.
template <typename Scalar, typename Symbol>
SpectralField<Scalar> apply_multiplier(const SpectralField<Scalar>& v, Symbol&& symbol) {
  return SpectralField<Scalar>(fourier::multiply(v.coeffs(), std::forward<Symbol>(symbol)));
}

template <typename Scalar>
SpectralField<Scalar> derivative_x(const SpectralField<Scalar>& v) {
  return apply_multiplier(v, [](int k) { return Complex<Scalar>(0, Scalar(k)); });
}

/// D^p with symbol |k|^p (so D^{2m} uses p = 2m).
template <typename Scalar>
SpectralField<Scalar> fractional_derivative(const SpectralField<Scalar>& v, Scalar p) {
  return apply_multiplier(v, [p](int k) { return abs_pow(k, p); });
}

/// d/dx (v^2), dealiased by the 2/3 rule (grid M >= 3N+1), truncated to the
/// band of v. The mean of the output is exactly zero.
template <typename Scalar>
CoeffVector<Scalar> nonlinear_term_raw(const CoeffVector<Scalar>& c) {
  const int n = band_of(c.size());
  if (n == 0) return CoeffVector<Scalar>::Zero(1);
  const int m = fourier::next_pow2(3 * n + 1);
  std::vector<Complex<Scalar>> freq(m, Complex<Scalar>(0)), time, square;
  for (int k = -n; k <= n; ++k) freq[(k + m) % m] = c(k + n);
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::Unscaled);
  fft.inv(time, freq);
  for (auto& value : time) value = Complex<Scalar>(value.real() * value.real(), 0);
  fft.fwd(square, time);
  CoeffVector<Scalar> out(2 * n + 1);
  for (int k = -n; k <= n; ++k) {
    out(k + n) = Complex<Scalar>(0, Scalar(k)) * square[(k + m) % m] / Scalar(m);
  }
  out(n) = Complex<Scalar>(0);
  fourier::make_hermitian(out);
  return out;
}

template <typename Scalar>
SpectralField<Scalar> nonlinear_term(const SpectralField<Scalar>& v) {
  return SpectralField<Scalar>(nonlinear_term_raw(v.coeffs()));
}

/// ||v||_{H^s}^2 = 2*pi * sum (1+|k|)^{2s} |vhat(k)|^2.
template <typename Scalar>
Scalar sobolev_norm_raw(const CoeffVector<Scalar>& c, Scalar s) {
  const int n = band_of(c.size());
  Scalar sum = 0;
  for (int k = -n; k <= n; ++k) {
    sum += std::pow(Scalar(1 + std::abs(k)), Scalar(2) * s) * std::norm(c(k + n));
  }
  return std::sqrt(kTwoPi<Scalar> * sum);
}

template <typename Scalar>
Scalar sobolev_norm(const SpectralField<Scalar>& v, Scalar s) {
  return sobolev_norm_raw(v.coeffs(), s);
}

template <typename Scalar>
Scalar l2_norm_raw(const CoeffVector<Scalar>& c) {
  return std::sqrt(kTwoPi<Scalar>) * c.norm();
}

template <typename Scalar>
Scalar l2_norm(const SpectralField<Scalar>& v) {
  return l2_norm_raw(v.coeffs());
}

/// (u, v)_{L2}; real for real fields.
template <typename Scalar>
Scalar l2_inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) {
  return fourier::inner(u.coeffs(), v.coeffs()).real();
}

/// [v] = (1/2pi) int v dx = vhat(0).
template <typename Scalar>
Scalar mean(const SpectralField<Scalar>& v) {
  return v[0].real();
}

template <typename Scalar>
SpectralField<Scalar> project_mean_zero(const SpectralField<Scalar>& v) {
  CoeffVector<Scalar> c = v.coeffs();
  c(v.cutoff()) = Complex<Scalar>(0);
  return SpectralField<Scalar>(std::move(c));
}

}  // namespace dgb
