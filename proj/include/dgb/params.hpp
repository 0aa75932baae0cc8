#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dgb/error.hpp"

namespace dgb {

/// Coefficients of
///   u_t + beta D^{2m} u_x + alpha H^{2r} u_x + 2 mu u_x + (u^2)_x = -G D^delta G u.
template <typename Scalar = double>
struct ModelParams {
  Scalar alpha = 1;
  Scalar beta = 1;
  Scalar m = 1;
  Scalar r = 0.5;
  Scalar mu = 0;
  Scalar delta = 1;

  /// The Benjamin equation (m = 1, r = 1/2) with unit coefficients.
  static ModelParams benjamin() { return ModelParams{}; }

  ModelParams with_mu(Scalar new_mu) const {
    ModelParams p = *this;
    p.mu = new_mu;
    return p;
  }
};

using ModelParamsd = ModelParams<double>;

/// Throws InvalidParameters naming the violated hypothesis of the
/// well-posedness and stabilization results.
template <typename Scalar>
void validate(const ModelParams<Scalar>& p) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidParameters, msg); };
  if (!std::isfinite(p.alpha) || !std::isfinite(p.beta) || !std::isfinite(p.m) ||
      !std::isfinite(p.r) || !std::isfinite(p.mu) || !std::isfinite(p.delta)) {
    fail("all parameters must be finite");
  }
  if (!(p.alpha > 0)) fail("alpha must be positive (hypothesis alpha > 0)");
  if (!(p.beta > 0)) fail("beta must be positive (hypothesis beta > 0)");
  if (!(p.m > Scalar(0.5))) fail("m must exceed 1/2 (hypothesis m > 1/2)");
  if (!(p.r > 0 && p.r < p.m)) fail("r must lie in (0, m) (hypothesis 0 < r < m)");
  const Scalar lower = std::max(Scalar(0), Scalar(2) - Scalar(2) * p.m);
  if (!(p.delta > lower)) {
    std::ostringstream os;
    os << "delta must exceed max(0, 2-2m) = " << lower << " (damping-order window max{0, 2-2m} < delta <= 1)";
    fail(os.str());
  }
  if (!(p.delta <= 1)) fail("delta must not exceed 1 (damping-order window max{0, 2-2m} < delta <= 1)");
}

}  // namespace dgb
