#pragma once

namespace tgh::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double pdf(double x);
double log_pdf(double x);
double cdf(double x);
// Upper tail 1 - cdf(x) without cancellation.
double sf(double x);
// Inverse CDF; throws DomainError unless 0 < p < 1.
double quantile(double p);

}  // namespace tgh::normal
