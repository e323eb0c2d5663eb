#include "tgh/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <string>

#include "tgh/errors.hpp"

namespace tgh::normal {

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile: probability must lie in (0,1), got " + std::to_string(p));
  }
  // erfc_inv keeps full relative accuracy in both tails.
  if (p < 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

}  // namespace tgh::normal
