#pragma once

// Dispersive symbol a(k), eigenvalues lambda_k = k a(k) of the skew-adjoint
// linear part, and brute-force verifiers for their arithmetic properties:
// multiplicity classes, the gap growth, the three-wave resonance bound and the
// two-mode modulation bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgb/error.hpp"
#include "dgb/params.hpp"
#include "dgb/spectral.hpp"

namespace dgb {

template <typename Scalar = double>
class SymbolTable {
 public:
  SymbolTable(const ModelParams<Scalar>& params, int cutoff)
      : params_(params), cutoff_(cutoff), a_(2 * cutoff + 1), lambda_(2 * cutoff + 1) {
    if (cutoff < 1) throw Error(ErrorKind::InvalidParameters, "symbol table needs N >= 1");
    a_(cutoff) = -2 * params.mu;
    lambda_(cutoff) = 0;
    for (int k = 1; k <= cutoff; ++k) {
      const Scalar ak = -params.beta * abs_pow(k, 2 * params.m) +
                        params.alpha * abs_pow(k, 2 * params.r) - 2 * params.mu;
      const Scalar lk = Scalar(k) * ak;
      a_(cutoff + k) = ak;
      a_(cutoff - k) = ak;
      // Odd symbol, enforced bit-for-bit.
      lambda_(cutoff + k) = lk;
      lambda_(cutoff - k) = -lk;
    }
  }

  const ModelParams<Scalar>& params() const { return params_; }
  int cutoff() const { return cutoff_; }
  Scalar a(int k) const { return a_(k + cutoff_); }
  Scalar lambda(int k) const { return lambda_(k + cutoff_); }
  const RealVector<Scalar>& lambdas() const { return lambda_; }

  /// C with |a(k)| <= C |k|^{2m} for k != 0.
  Scalar order_constant() const {
    return params_.beta + params_.alpha + 2 * std::abs(params_.mu);
  }

 private:
  ModelParams<Scalar> params_;
  int cutoff_;
  RealVector<Scalar> a_;
  RealVector<Scalar> lambda_;
};

template <typename Scalar>
SymbolTable<Scalar> build_symbols(const ModelParams<Scalar>& params, int cutoff) {
  return SymbolTable<Scalar>(params, cutoff);
}

// ---------------------------------------------------------------------------
// Multiplicity classes I(k1) = {k : lambda_k = lambda_k1}

struct EigenClass {
  int representative = 0;  ///< member of smallest |k| (positive on ties)
  std::vector<int> members;  ///< sorted ascending
  int count() const { return static_cast<int>(members.size()); }
};

struct MultiplicityReport {
  std::vector<EigenClass> classes;
  int max_multiplicity = 0;
  /// Every class meeting |k| >= simple_beyond is a singleton (within the scan).
  int simple_beyond = 0;

  /// One representative per class: the index set on which the eigenvalues
  /// are pairwise distinct.
  std::vector<int> representatives() const {
    std::vector<int> reps;
    for (const auto& c : classes) reps.push_back(c.representative);
    std::sort(reps.begin(), reps.end());
    return reps;
  }

  const EigenClass& class_of(int k) const {
    for (const auto& c : classes) {
      if (std::find(c.members.begin(), c.members.end(), k) != c.members.end()) return c;
    }
    throw Error(ErrorKind::EmptyScan, "mode outside the scanned range");
  }
};

/// Partitions {-N..N} into classes of equal eigenvalue. tol == 0 groups exact
/// equality; tol > 0 links neighbours with |lambda_j - lambda_k| <= tol.
/// Raises MultiplicityViolation if a class has more than five members.
template <typename Scalar>
MultiplicityReport multiplicity_scan(const SymbolTable<Scalar>& table, Scalar tol = 0) {
  if (tol < 0) throw Error(ErrorKind::InvalidParameters, "tolerance must be nonnegative");
  const int n = table.cutoff();
  std::vector<std::pair<Scalar, int>> sorted;
  sorted.reserve(2 * n + 1);
  for (int k = -n; k <= n; ++k) sorted.emplace_back(table.lambda(k), k);
  std::sort(sorted.begin(), sorted.end());

  MultiplicityReport report;
  auto close_class = [&](std::vector<int> members) {
    std::sort(members.begin(), members.end());
    EigenClass c;
    c.members = std::move(members);
    c.representative = c.members.front();
    for (int k : c.members) {
      const int best = c.representative;
      if (std::abs(k) < std::abs(best) || (std::abs(k) == std::abs(best) && k > best)) {
        c.representative = k;
      }
    }
    report.max_multiplicity = std::max(report.max_multiplicity, c.count());
    if (c.count() > 1) {
      for (int k : c.members) report.simple_beyond = std::max(report.simple_beyond, std::abs(k) + 1);
    }
    report.classes.push_back(std::move(c));
  };

  std::vector<int> current{sorted.front().second};
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const bool same = tol == 0 ? sorted[i].first == sorted[i - 1].first
                               : sorted[i].first - sorted[i - 1].first <= tol;
    if (same) {
      current.push_back(sorted[i].second);
    } else {
      close_class(std::move(current));
      current = {sorted[i].second};
    }
  }
  close_class(std::move(current));

  if (report.max_multiplicity > 5) {
    throw Error(ErrorKind::MultiplicityViolation,
                "eigenvalue class of size " + std::to_string(report.max_multiplicity) +
                    " exceeds the bound 5");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Gap growth lambda_k - lambda_{k+1} > alpha (m - r) k^{2r}

template <typename Scalar>
struct GapRow {
  int k;
  Scalar gap;
  Scalar bound;
  bool pass;
};

template <typename Scalar>
struct GapReport {
  std::vector<GapRow<Scalar>> rows;
  /// Smallest k from which every row passes; empty if the last row fails.
  std::optional<int> threshold;
  /// Gaps strictly increase for k >= threshold.
  bool monotone_beyond_threshold = false;
};

template <typename Scalar>
GapReport<Scalar> gap_check(const SymbolTable<Scalar>& table, int k_min) {
  const int n = table.cutoff();
  if (k_min < 1 || k_min >= n) {
    throw Error(ErrorKind::EmptyScan, "gap check needs 1 <= kMin < N");
  }
  const auto& p = table.params();
  GapReport<Scalar> report;
  for (int k = k_min; k < n; ++k) {
    GapRow<Scalar> row;
    row.k = k;
    row.gap = table.lambda(k) - table.lambda(k + 1);
    row.bound = p.alpha * (p.m - p.r) * std::pow(Scalar(k), 2 * p.r);
    row.pass = row.gap > row.bound;
    report.rows.push_back(row);
  }
  for (auto it = report.rows.rbegin(); it != report.rows.rend() && it->pass; ++it) {
    report.threshold = it->k;
  }
  if (report.threshold) {
    report.monotone_beyond_threshold = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      if (report.rows[i].k <= *report.threshold) continue;
      if (!(report.rows[i].gap > report.rows[i - 1].gap)) report.monotone_beyond_threshold = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Three-wave resonance |lambda_k1 + lambda_k2 + lambda_k3| vs Nmax^{2m} Nmin

template <typename Scalar>
struct ResonanceShell {
  int max_abs_k;  ///< max |k_j| shared by all triples in the shell
  Scalar min_ratio;
  std::array<int, 3> witness;
};

template <typename Scalar>
struct ResonanceReport {
  Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
  std::array<int, 3> witness{0, 0, 0};
  long long triples = 0;
  std::vector<ResonanceShell<Scalar>> shells;
};

/// |sum lambda| / (max|k|^{2m} min|k|) for one triple; exact resonances
/// (cancellation to 1e-12 of the summands) count as zero.
template <typename Scalar>
Scalar resonance_ratio(const SymbolTable<Scalar>& table, const std::array<int, 3>& k) {
  Scalar sum = 0, scale = 0;
  int kmax = 0, kmin = std::numeric_limits<int>::max();
  for (int kj : k) {
    sum += table.lambda(kj);
    scale += std::abs(table.lambda(kj));
    kmax = std::max(kmax, std::abs(kj));
    kmin = std::min(kmin, std::abs(kj));
  }
  if (std::abs(sum) <= Scalar(1e-12) * scale) return 0;
  return std::abs(sum) / (std::pow(Scalar(kmax), 2 * table.params().m) * Scalar(kmin));
}

/// Scans all triples k1 + k2 + k3 = 0, k1 k2 k3 != 0, a <= max|k_j| <= Nmax.
template <typename Scalar>
ResonanceReport<Scalar> resonance_check(const SymbolTable<Scalar>& table, int n_max, int a_threshold) {
  if (n_max > table.cutoff()) {
    throw Error(ErrorKind::EmptyScan, "Nmax exceeds the symbol table cutoff");
  }
  ResonanceReport<Scalar> report;
  const int lo = std::max(a_threshold, 1);
  for (int shell = lo; shell <= n_max; ++shell) {
    ResonanceShell<Scalar> best{shell, std::numeric_limits<Scalar>::infinity(), {0, 0, 0}};
    // Any triple can be permuted so slot 1 holds an entry of modulus shell.
    for (int k1 : {-shell, shell}) {
      for (int k2 = -shell; k2 <= shell; ++k2) {
        const int k3 = -k1 - k2;
        if (k2 == 0 || k3 == 0 || std::abs(k3) > shell) continue;
        const std::array<int, 3> triple{k1, k2, k3};
        const Scalar ratio = resonance_ratio(table, triple);
        ++report.triples;
        if (ratio < best.min_ratio) {
          best.min_ratio = ratio;
          best.witness = triple;
        }
      }
    }
    if (best.min_ratio < report.min_ratio) {
      report.min_ratio = best.min_ratio;
      report.witness = best.witness;
    }
    report.shells.push_back(best);
  }
  if (report.triples == 0) throw Error(ErrorKind::EmptyScan, "no admissible triples in range");
  return report;
}

/// Smallest a such that every shell max|k_j| >= a has a positive minimum ratio.
template <typename Scalar>
int resonance_threshold(const ResonanceReport<Scalar>& report) {
  int threshold = report.shells.empty() ? 0 : report.shells.front().max_abs_k;
  for (const auto& shell : report.shells) {
    if (!(shell.min_ratio > 0)) threshold = shell.max_abs_k + 1;
  }
  return threshold;
}

// ---------------------------------------------------------------------------
// Two-mode modulation bound

template <typename Scalar>
struct ModulationReport {
  Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
  std::pair<int, int> witness{0, 0};
  long long pairs = 0;
};

/// min over tau of max{<(tau-l_k)/<k>^d>, <(tau-l_n)/<n>^d>}, attained where
/// the two weighted distances coincide.
template <typename Scalar>
Scalar modulation_minmax(const SymbolTable<Scalar>& table, int k, int n) {
  const Scalar d = table.params().delta;
  const Scalar wk = std::pow(bracket(Scalar(k)), d);
  const Scalar wn = std::pow(bracket(Scalar(n)), d);
  return bracket(std::abs(table.lambda(k) - table.lambda(n)) / (wk + wn));
}

/// Pairs k != n with floor <= |k|, |n| <= Nmax and |k|/|n| in [lo, hi];
/// returns the minimum of minmax / max{<k>, <n>}^{2m - delta}.
template <typename Scalar>
ModulationReport<Scalar> modulation_check(const SymbolTable<Scalar>& table, int n_max, int floor,
                                          Scalar window_lo = Scalar(0.5),
                                          Scalar window_hi = Scalar(2)) {
  if (n_max > table.cutoff()) {
    throw Error(ErrorKind::EmptyScan, "Nmax exceeds the symbol table cutoff");
  }
  const auto& p = table.params();
  ModulationReport<Scalar> report;
  const int lo = std::max(floor, 1);
  for (int k = -n_max; k <= n_max; ++k) {
    if (std::abs(k) < lo) continue;
    for (int n = -n_max; n <= n_max; ++n) {
      if (n == k || std::abs(n) < lo) continue;
      const Scalar ratio_kn = Scalar(std::abs(k)) / Scalar(std::abs(n));
      if (ratio_kn < window_lo || ratio_kn > window_hi) continue;
      const Scalar bound =
          std::pow(std::max(bracket(Scalar(k)), bracket(Scalar(n))), 2 * p.m - p.delta);
      const Scalar ratio = modulation_minmax(table, k, n) / bound;
      ++report.pairs;
      if (ratio < report.min_ratio) {
        report.min_ratio = ratio;
        report.witness = {k, n};
      }
    }
  }
  if (report.pairs == 0) throw Error(ErrorKind::EmptyScan, "no admissible pairs in range");
  return report;
}

}  // namespace dgb
