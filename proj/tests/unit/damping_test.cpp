#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "dgb/damping.hpp"
#include "dgb/error.hpp"

using namespace dgb;
using cd = std::complex<double>;

namespace {

constexpr double kHalfPi = oracle::kPi / 2;

DampingProfiled small_bump(double delta = 1.0) { return make_profile_bump(kHalfPi, 3 * kHalfPi, 16, 256, delta); }
DampingProfiled standard_bump(double delta = 1.0) {
  return make_profile_bump(kHalfPi, 3 * kHalfPi, 64, 1024, delta);
}

std::vector<double> times(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

// D^delta of grid data whose band is at most `band`.
std::vector<double> grid_D(const std::vector<double>& f, int band, double delta) {
  auto c = oracle::dft(f, band);
  for (int k = -band; k <= band; ++k) c(k + band) *= std::pow(std::abs(double(k)), delta);
  return oracle::sample(c, static_cast<int>(f.size()));
}

// G on grid values: g (f - int f g).
std::vector<double> grid_G(const std::vector<double>& g, const std::vector<double>& f) {
  const double s = oracle::integrate(times(f, g));
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = g[j] * (f[j] - s);
  return out;
}

double max_diff(const CoeffVector<double>& a, const CoeffVector<double>& b) {
  const int n = std::max(band_of(a.size()), band_of(b.size()));
  return (fourier::rebanded(a, n) - fourier::rebanded(b, n)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Profile, GlobalSymbol) {
  const auto p = make_profile_global(1.0);
  EXPECT_EQ(p.d(0), 0);
  EXPECT_NEAR(p.d(2), 2 / (4 * oracle::kPi * oracle::kPi), 1e-16);
  for (int k = 1; k <= 256; ++k) {
    const double expect = k / (4 * oracle::kPi * oracle::kPi);
    EXPECT_LE(std::abs(p.d(k) - expect), 1e-14 * expect);
    EXPECT_EQ(p.d(-k), p.d(k));
  }
}

TEST(Profile, BumpNormalizationAndSign) {
  const auto p = standard_bump();
  EXPECT_EQ(p.ghat(0), cd(1 / (2 * oracle::kPi)));
  const auto g = oracle::sample(p.ghat(), 2048);
  for (double v : g) EXPECT_GE(v, -1e-10);
  EXPECT_NEAR(oracle::integrate(g), 1.0, 1e-13);
  // Mass concentrates inside the support.
  EXPECT_GT(oracle::evaluate(p.ghat(), oracle::kPi), 10 * oracle::evaluate(p.ghat(), 0.0));
}

TEST(Profile, FullCircleSupportIsAllowed) {
  EXPECT_NO_THROW((void)make_profile_bump(0.0, 2 * oracle::kPi, 32, 512, 1.0));
}

TEST(Profile, SharpTruncationTooCoarse) {
  try {
    (void)make_profile_bump(kHalfPi, 3 * kHalfPi, 64, 1024, 1.0, BumpTruncation::Sharp);
    FAIL() << "expected TruncationTooCoarse";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationTooCoarse);
  }
}

TEST(Profile, InvalidSupportRejected) {
  for (auto [a, b] : {std::pair{2.0, 1.0}, {1.0, 1.0}, {-0.5, 1.0}, {1.0, 7.0}}) {
    try {
      (void)make_profile_bump(a, b, 16, 256, 1.0);
      FAIL() << "expected InvalidSupport for (" << a << ", " << b << ")";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidSupport);
    }
  }
  EXPECT_THROW((void)make_profile_bump(1.0, 2.0, 64, 100, 1.0), Error);
}

TEST(Profile, TranslationKeepsSymbol) {
  const auto p = standard_bump();
  const auto q = translated(p, oracle::kPi);
  for (int k = 0; k <= 100; ++k) EXPECT_NEAR(q.d(k), p.d(k), 1e-12 * std::max(1.0, p.d(k)));
}

TEST(Profile, SymbolMatchesConvolutionRoute) {
  // d(k) is the k-th coefficient of g D^delta (g e_k).
  for (const auto& p : {small_bump(), small_bump(0.6), make_profile_global(0.8)}) {
    for (int k : {1, 2, 5, 17, 40}) {
      CoeffVector<double> e = CoeffVector<double>::Zero(2 * k + 1);
      e(2 * k) = 1;
      const auto out = fourier::convolve(p.ghat(), apply_D_raw(fourier::convolve(p.ghat(), e), p.delta()));
      EXPECT_NEAR(std::abs(fourier::at(out, k) - cd(p.d(k))), 0, 1e-15 * std::max(1.0, p.d(k)) + 1e-16);
    }
  }
}

TEST(Profile, EquivalenceConstants) {
  const auto [lo, hi] = lemma_d_equivalence(make_profile_global(1.0), 256);
  const double c = 1 / (4 * oracle::kPi * oracle::kPi);
  EXPECT_NEAR(lo, c / std::sqrt(2.0), 1e-15);
  EXPECT_LT(hi, c);
  const auto [blo, bhi] = lemma_d_equivalence(standard_bump(), 256);
  EXPECT_GT(blo, 0);
  EXPECT_GE(bhi, blo);
}

TEST(Profile, DegenerateProfileSignalled) {
  const DampingProfiled zero(CoeffVector<double>::Zero(3), 1.0, false, 1.0, 2.0);
  try {
    (void)lemma_d_equivalence(zero, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProfileDegenerate);
  }
}

TEST(Operators, GlobalGExamples) {
  const auto p = make_profile_global(1.0);
  const auto gv = apply_G(p, SpectralFieldd::cosine(4, 1, 1.0));
  EXPECT_LE(max_diff(gv.coeffs(), SpectralFieldd::cosine(4, 1, 1 / (2 * oracle::kPi)).coeffs()), 1e-16);
  EXPECT_LE(apply_G(p, SpectralFieldd::constant(4, 3.0)).coeffs().cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Operators, GMatchesGridFormula) {
  std::mt19937_64 rng(61);
  const auto p = small_bump();
  for (int trial = 0; trial < 5; ++trial) {
    const auto v = oracle::random_field(10, rng, 0.5, 0.4);
    const int m = 2 * (10 + 16) + 7;
    const auto g = oracle::sample(p.ghat(), m);
    const auto expect = grid_G(g, oracle::sample(v, m));
    const auto got = oracle::sample(apply_G_raw(p, v), m);
    for (int j = 0; j < m; ++j) EXPECT_NEAR(got[j], expect[j], 1e-13);
  }
}

TEST(Operators, GDdeltaGMatchesGridFormula) {
  std::mt19937_64 rng(67);
  for (const auto& p : {small_bump(), small_bump(0.5)}) {
    const auto v = oracle::random_field(8, rng, 0.5);
    const int m = 2 * (8 + 32) + 9;
    const auto g = oracle::sample(p.ghat(), m);
    const auto w = grid_G(g, grid_D(grid_G(g, oracle::sample(v, m)), 8 + 16, p.delta()));
    EXPECT_LE(max_diff(apply_GDdeltaG_raw(p, v), oracle::dft(w, 8 + 32)), 1e-13);
  }
}

TEST(Operators, RMatchesGridFormula) {
  std::mt19937_64 rng(71);
  const auto p = small_bump(0.7);
  const auto v = oracle::random_field(8, rng, 0.3);
  const int m = 2 * (8 + 32) + 9;
  const auto g = oracle::sample(p.ghat(), m);
  const auto gv = times(g, oracle::sample(v, m));
  const auto dgv = grid_D(gv, 8 + 16, p.delta());
  const auto dg = grid_D(g, 16, p.delta());
  const double i1 = oracle::integrate(times(g, dgv));
  const double i2 = oracle::integrate(gv);
  const double i3 = oracle::integrate(times(g, dg));
  std::vector<double> r(m);
  for (int j = 0; j < m; ++j) r[j] = i1 / (2 * oracle::kPi) - i2 * g[j] * dg[j] - i1 * g[j] + i2 * i3 * g[j];
  EXPECT_LE(max_diff(apply_R_raw(p, v), oracle::dft(r, 8 + 32)), 1e-13);
}

TEST(Operators, N1MatchesConvolutionRoute) {
  std::mt19937_64 rng(73);
  const auto p = small_bump();
  const auto v = oracle::random_field(12, rng, 0.5);
  // g D^delta (g v) minus its diagonal part.
  CoeffVector<double> expect =
      fourier::convolve(p.ghat(), apply_D_raw(fourier::convolve(p.ghat(), v), p.delta()));
  const int nout = band_of(expect.size());
  for (int k = -12; k <= 12; ++k) expect(k + nout) -= p.d(k) * v(k + 12);
  expect(nout) = 0;
  EXPECT_LE(max_diff(apply_N1_raw(p, v), expect), 1e-14);
}

TEST(Operators, GlobalSplitHasNoRemainder) {
  std::mt19937_64 rng(79);
  const auto p = make_profile_global(1.0);
  const auto v = oracle::random_field(16, rng);
  EXPECT_LE(apply_N1_raw(p, v).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_LE(apply_R_raw(p, v).cwiseAbs().maxCoeff(), 1e-16);
}

// Property: the split reproduces G D^delta G on random fields for both profiles.
TEST(Operators, DecompositionIdentity) {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> normal;
  for (const auto& p : {make_profile_global(1.0), small_bump(), standard_bump(0.6)}) {
    for (int trial = 0; trial < 8; ++trial) {
      const auto v = oracle::random_field(24, rng, 0.8, trial % 2 ? normal(rng) : 0.0);
      EXPECT_LE(decomposition_residual(p, v), 1e-10);
    }
  }
  EXPECT_NO_THROW((void)check_decomposition(standard_bump(), SpectralFieldd::cosine(32, 3, 1.0)));
}

// Property: G is L2 self-adjoint, maps into mean-zero functions, and the
// damping is dissipative with rate ||D^{delta/2} G v||^2.
TEST(Operators, SelfAdjointAndDissipative) {
  std::mt19937_64 rng(89);
  for (const auto& p : {make_profile_global(0.9), small_bump(), standard_bump()}) {
    for (int trial = 0; trial < 6; ++trial) {
      const auto u = oracle::random_field(16, rng, 0.5, 0.3);
      const auto v = oracle::random_field(16, rng, 0.5, -0.2);
      const double lhs = fourier::inner(CoeffVector<double>(apply_G_raw(p, u)), v).real();
      const double rhs = fourier::inner(u, CoeffVector<double>(apply_G_raw(p, v))).real();
      EXPECT_NEAR(lhs, rhs, 1e-13);
      EXPECT_NEAR(std::abs(apply_G_raw(p, u)(16 + p.cutoff())), 0, 1e-16);
      const double q = fourier::inner(CoeffVector<double>(apply_GDdeltaG_raw(p, v)), v).real();
      const double rate = dissipation_rate_raw(p, v);
      EXPECT_NEAR(q, rate, 1e-12 * std::max(1.0, rate));
      EXPECT_GE(rate, 0);
    }
  }
}

TEST(Operators, RIsBoundedByItsMatrixNorm) {
  std::mt19937_64 rng(97);
  const auto p = standard_bump();
  const int n = 12;
  ComplexMatrix<double> r(2 * damping_band(p, n) + 1, 2 * n + 1);
  for (int j = 0; j <= 2 * n; ++j) {
    CoeffVector<double> e = CoeffVector<double>::Zero(2 * n + 1);
    e(j) = 1;
    r.col(j) = apply_R_raw(p, e);
  }
  const double bound = Eigen::JacobiSVD<ComplexMatrix<double>>(r).singularValues()(0);
  EXPECT_TRUE(std::isfinite(bound));
  double probe = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = oracle::random_field(n, rng, 0.0, 0.5);
    probe = std::max(probe, apply_R_raw(p, v).norm() / v.norm());
  }
  EXPECT_LE(probe, bound * (1 + 1e-12));
}

TEST(Matrices, MatchOperators) {
  std::mt19937_64 rng(101);
  const auto p = small_bump();
  const int n = 10;
  const auto v = oracle::random_field(n, rng, 0.5, 0.3);
  EXPECT_LE((g_matrix(p, n) * v - apply_G_raw(p, v)).cwiseAbs().maxCoeff(), 1e-15);
  const auto full = apply_GDdeltaG_raw(p, v);
  const auto b = damping_matrix(p, n);
  EXPECT_LE((b * v - fourier::rebanded(full, n)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((b - b.adjoint()).cwiseAbs().maxCoeff(), 0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> es(b);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
  EXPECT_LE((g_matrix_square(p, n) * v - fourier::rebanded(CoeffVector<double>(apply_G_raw(p, v)), n))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}
