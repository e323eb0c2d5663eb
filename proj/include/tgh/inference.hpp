#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "tgh/estimators.hpp"

namespace tgh {

// Null hypotheses on the shape parameters.
enum class NullKind {
  GZero,     // g = 0, h free
  HZero,     // h = 0, g free
  GAndHZero  // g = h = 0
};

std::string_view null_name(NullKind k);
// Accepts "g", "h", "gh" (and the long forms g_zero, h_zero, g_and_h_zero).
NullKind parse_null(std::string_view s);

// weight0 * chi2(df_a) + (1 - weight0) * chi2(df_b); df = 0 is a point mass at 0.
struct MixedChiSq {
  double weight0 = 1.0;
  int df_a = 1;
  int df_b = 1;

  double cdf(double x) const;
  double sf(double x) const;
  void validate() const;
};

// Limiting law of D_n under each null: chi2_1, 0.5 chi2_0 + 0.5 chi2_1,
// 0.5 chi2_1 + 0.5 chi2_2.
MixedChiSq reference_distribution(NullKind k);

double chisq_cdf(int df, double x);
double chisq_sf(int df, double x);

double mixed_chisq_quantile(const MixedChiSq& d, double prob);
double mixed_chisq_sf(const MixedChiSq& d, double x);

// MALE over the null subspace (g and/or h frozen at 0).
FitResult fit_restricted(const Sample& s, NullKind null, const GridConfig& cfg = {},
                         const OptimizerOptions& opt = {});

// Allowed negative D_n before it is reported as suspicious.
inline constexpr double kClampFlagTol = 1e-6;

struct AlrtResult {
  double d_n = 0.0;
  NullKind null = NullKind::GZero;
  MixedChiSq ref_dist;
  double level = 0.05;
  double critical_value = 0.0;  // (1 - level) quantile of ref_dist
  double p_value = 1.0;
  bool reject = false;
  double clamped = 0.0;         // magnitude of negative D_n removed by the clamp
  bool clamp_flagged = false;   // clamped > kClampFlagTol
  bool converged = false;       // both fits converged
  FitResult restricted_fit;
  FitResult full_fit;
};

AlrtResult alrt(const Sample& s, NullKind null, const GridConfig& cfg = {}, double level = 0.05,
                const OptimizerOptions& opt = {});

using DrawMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

// Draws of sqrt(n) (theta_hat - theta_0) from the limiting law, given the
// per-observation information `info`. boundary = true applies the h_0 = 0
// mixture: a draw Z ~ N(0, I^{-1}) is kept when Z_4 > 0 and otherwise
// projected to (Z_j - I^{j4}/I^{44} Z_4, 0).
DrawMatrix asymptotic_distribution(const Mat4& info, bool boundary, std::size_t n_draws,
                                   std::uint64_t seed);

// Same draws mapped to the estimator scale theta_hat + row / sqrt(n).
DrawMatrix asymptotic_estimator_draws(const GhParams& theta_hat, const Mat4& info, std::size_t n,
                                      bool boundary, std::size_t n_draws, std::uint64_t seed);

// Fourth (h) component of n^{-1/2} times the score of the exact
// log-likelihood at p0.
double s_n_statistic(const Sample& s, const GhParams& p0);

// g = h = 0 special case written in the standardized values z_i:
// (3/2) n^{-1/2} sum(z_i^4/3 - z_i^2).
double s_n_normal_closed_form(std::span<const double> z);

}  // namespace tgh
