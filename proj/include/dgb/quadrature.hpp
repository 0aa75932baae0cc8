#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgb/spectral.hpp"

namespace dgb {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
template <typename Scalar = double>
std::pair<std::vector<Scalar>, std::vector<Scalar>> gauss_legendre(int n) {
  std::vector<Scalar> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar z = std::cos(kPi<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = (Scalar(2 * k - 1) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = Scalar(n) * (z * p1 - p0) / (z * z - 1);
      const Scalar step = p1 / dp;
      z -= step;
      if (std::abs(step) < Scalar(1e-15)) break;
    }
    {
      Scalar p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = (Scalar(2 * k - 1) * z * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (z * p1 - p0) / (z * z - 1);
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Composite Gauss-Legendre rule on [a, b]: `panels` equal panels with
/// `order` nodes each.
template <typename Scalar = double>
std::pair<std::vector<Scalar>, std::vector<Scalar>> composite_gauss_legendre(Scalar a, Scalar b,
                                                                             int panels, int order) {
  const auto [x, w] = gauss_legendre<Scalar>(order);
  std::vector<Scalar> nodes, weights;
  nodes.reserve(panels * order);
  weights.reserve(panels * order);
  const Scalar h = (b - a) / Scalar(panels);
  for (int p = 0; p < panels; ++p) {
    const Scalar mid = a + (Scalar(p) + Scalar(0.5)) * h;
    for (int i = 0; i < order; ++i) {
      nodes.push_back(mid + Scalar(0.5) * h * x[i]);
      weights.push_back(Scalar(0.5) * h * w[i]);
    }
  }
  return {nodes, weights};
}

}  // namespace dgb
