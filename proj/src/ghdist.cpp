#include "tgh/ghdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tgh/errors.hpp"
#include "tgh/normal.hpp"

namespace tgh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

bool g_is_zero(double g) { return std::abs(g) < kGSwitch; }

// exp(g z) with the same limit convention as skew_factor.
double growth(double z, double g) { return g_is_zero(g) ? 1.0 : std::exp(g * z); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

bool GhParams::valid() const {
  return std::isfinite(xi) && std::isfinite(omega) && std::isfinite(g) && std::isfinite(h) &&
         omega > 0.0 && h >= 0.0;
}

void GhParams::validate() const {
  if (!(std::isfinite(xi) && std::isfinite(omega) && std::isfinite(g) && std::isfinite(h))) {
    throw DomainError("parameters must be finite");
  }
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  if (!(h >= 0.0)) throw DomainError("h must be nonnegative");
}

double skew_factor(double z, double g) {
  if (g_is_zero(g)) return z;
  return std::expm1(g * z) / g;
}

double skew_factor_dg(double z, double g) {
  const double gz = g * z;
  if (std::abs(gz) < 0.1) {
    // sum_{k>=2} (k-1) g^{k-2} z^k / k!
    double term = z * z / 2.0;  // k = 2
    double sum = term;
    double power = 1.0;  // (gz)^{k-2}
    double fact = 2.0;
    for (int k = 3; k <= 14; ++k) {
      power *= gz;
      fact *= k;
      term = (k - 1) * power * z * z / fact;
      sum += term;
    }
    return sum;
  }
  return (gz * std::exp(gz) - std::expm1(gz)) / (g * g);
}

double tau(double z, double g, double h) { return skew_factor(z, g) * std::exp(0.5 * h * z * z); }

double tau_prime(double z, double g, double h) {
  return (growth(z, g) + h * z * skew_factor(z, g)) * std::exp(0.5 * h * z * z);
}

double tau_inverse(double x, double g, double h, double tol) {
  if (!(tol > 0.0)) throw DomainError("tau_inverse: tolerance must be positive");
  if (x == 0.0) return 0.0;
  if (h == 0.0) {
    // Closed form. For g != 0 the range of tau is bounded on one side.
    if (g_is_zero(g)) return x;
    const double arg = g * x;
    if (arg <= -1.0) return g > 0.0 ? -kInf : kInf;
    return std::log1p(arg) / g;
  }

  const double scale = std::max(1.0, std::abs(x));
  auto f = [&](double z) { return tau(z, g, h) - x; };
  int iter = 0;

  double z = x / (1.0 + h);
  double fz = f(z);
  double lo;
  double hi;
  if (fz == 0.0) return z;
  if (fz < 0.0) {
    lo = z;
    double step = std::max(1.0, std::abs(z));
    hi = z + step;
    while (f(hi) < 0.0) {
      if (++iter > kTauInverseMaxIter) throw NonConvergence("tau_inverse: bracket expansion failed");
      lo = hi;
      step *= 2.0;
      hi = z + step;
    }
  } else {
    hi = z;
    double step = std::max(1.0, std::abs(z));
    lo = z - step;
    while (f(lo) > 0.0) {
      if (++iter > kTauInverseMaxIter) throw NonConvergence("tau_inverse: bracket expansion failed");
      hi = lo;
      step *= 2.0;
      lo = z - step;
    }
  }

  // Safeguarded Newton on the monotone function inside [lo, hi]: fall back to
  // bisection when the Newton step leaves the bracket or fails to halve the
  // previous step (slow progress on the exp(h z^2/2) tails).
  z = std::clamp(z, lo, hi);
  double prev_step = hi - lo;
  for (; iter <= kTauInverseMaxIter; ++iter) {
    fz = f(z);
    if (fz < 0.0) {
      lo = z;
    } else if (fz > 0.0) {
      hi = z;
    } else {
      return z;
    }
    const double slope = tau_prime(z, g, h);
    double next = z - fz / slope;
    bool newton_ok = std::isfinite(next) && next > lo && next < hi &&
                     std::abs(2.0 * fz) <= std::abs(prev_step * slope);
    if (!newton_ok) next = 0.5 * (lo + hi);
    if (std::abs(fz) <= tol * scale) {
      // Converged in residual; one more Newton step brings z to working precision.
      const double polish = z - fz / slope;
      return std::isfinite(polish) && polish >= lo && polish <= hi ? polish : z;
    }
    if (hi - lo <= 4.0 * kEps * std::max(1.0, std::abs(z))) return next;
    prev_step = std::abs(next - z);
    z = next;
  }
  throw NonConvergence("tau_inverse: iteration cap of " + std::to_string(kTauInverseMaxIter) +
                       " exceeded for x=" + std::to_string(x));
}

double varphi(double z, const GhParams& p) {
  if (std::isinf(z)) return -kInf;
  const double spread = growth(z, p.g) + p.h * z * skew_factor(z, p.g);
  return -0.5 * (1.0 + p.h) * z * z - std::log(spread) - std::log(p.omega) - normal::kLogSqrt2Pi;
}

double dvarphi_dz(double z, const GhParams& p) {
  const double g = g_is_zero(p.g) ? 0.0 : p.g;
  const double sf = skew_factor(z, p.g);
  const double spread = growth(z, p.g) + p.h * z * sf;
  return -(1.0 + p.h) * z - g - p.h * (sf + z) / spread;
}

double log_density_exact(double y, const GhParams& p, double tol) {
  if (!(p.omega > 0.0)) throw DomainError("omega must be positive");
  const double z = tau_inverse((y - p.xi) / p.omega, p.g, p.h, tol);
  return varphi(z, p);
}

double cdf(double y, const GhParams& p, double tol) {
  if (!(p.omega > 0.0)) throw DomainError("omega must be positive");
  return normal::cdf(tau_inverse((y - p.xi) / p.omega, p.g, p.h, tol));
}

double quantile(double prob, const GhParams& p) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw DomainError("quantile: probability must lie in (0,1)");
  }
  return p.xi + p.omega * tau(normal::quantile(prob), p.g, p.h);
}

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("sample must contain at least one observation");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("sample contains a non-finite value");
  }
  std::sort(values_.begin(), values_.end());
}

Sample Sample::transformed(double a, double b) const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [&](double v) { return a + b * v; });
  return Sample(std::move(out));
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

double NormalStream::next() {
  // 53-bit uniform on the open interval (0,1).
  const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  return normal::quantile(u);
}

std::vector<double> draw(std::size_t n, const GhParams& p, std::uint64_t seed) {
  p.validate();
  NormalStream stream(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = p.xi + p.omega * tau(stream.next(), p.g, p.h);
  return out;
}

Sample sample(std::size_t n, const GhParams& p, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be at least 1");
  return Sample(draw(n, p, seed));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ (a * 0xD1B54A32D192ED03ULL));
  x = splitmix64(x ^ (b * 0xABC98388FB8FAC03ULL));
  return x;
}

}  // namespace tgh
