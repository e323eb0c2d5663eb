#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tgh {

// Parameter vector (xi, omega, g, h) of Tukey's g-and-h law
//   Y = xi + omega * tau_{g,h}(Z),  Z ~ N(0,1).
struct GhParams {
  double xi = 0.0;     // location
  double omega = 1.0;  // scale, > 0
  double g = 0.0;      // skewness
  double h = 0.0;      // tail weight, >= 0

  bool valid() const;
  // Throws DomainError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const GhParams&, const GhParams&) = default;
};

// Below this |g| the g -> 0 limit forms are used.
inline constexpr double kGSwitch = 1e-8;
inline constexpr int kTauInverseMaxIter = 200;
inline constexpr double kDefaultRootTol = 1e-10;

// (exp(g z) - 1) / g with its g -> 0 limit z.
double skew_factor(double z, double g);
// d/dg of skew_factor; limit z^2 / 2.
double skew_factor_dg(double z, double g);

double tau(double z, double g, double h);
double tau_prime(double z, double g, double h);
// Solves tau(z) = x. Throws NonConvergence after kTauInverseMaxIter steps.
double tau_inverse(double x, double g, double h, double tol = kDefaultRootTol);

// log f(y) written as a function of the normal score z = tau^{-1}((y-xi)/omega):
//   -(1+h) z^2/2 - log[exp(gz) + h z (exp(gz)-1)/g] - log omega - log(2 pi)/2
double varphi(double z, const GhParams& p);
// Derivative of varphi in z with theta held fixed.
double dvarphi_dz(double z, const GhParams& p);

double log_density_exact(double y, const GhParams& p, double tol = kDefaultRootTol);
double cdf(double y, const GhParams& p, double tol = kDefaultRootTol);
double quantile(double prob, const GhParams& p);

// Sorted, finite, non-empty observations.
class Sample {
 public:
  explicit Sample(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double operator[](std::size_t i) const { return values_[i]; }

  // Affine image a + b*y (b != 0), re-sorted.
  Sample transformed(double a, double b) const;

 private:
  std::vector<double> values_;
};

// Seedable deterministic source of standard normal variates. Uniforms come
// from mt19937_64 (bit-identical across conforming platforms) and are mapped
// through the normal quantile.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
};

// Draws in generation order.
std::vector<double> draw(std::size_t n, const GhParams& p, std::uint64_t seed);
Sample sample(std::size_t n, const GhParams& p, std::uint64_t seed);

// Mixes a base seed with two indices into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace tgh
