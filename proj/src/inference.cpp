#include "tgh/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Cholesky>

#include "tgh/errors.hpp"

namespace tgh {

std::string_view null_name(NullKind k) {
  switch (k) {
    case NullKind::GZero: return "g_zero";
    case NullKind::HZero: return "h_zero";
    case NullKind::GAndHZero: return "g_and_h_zero";
  }
  return "?";
}

NullKind parse_null(std::string_view s) {
  if (s == "g" || s == "g_zero") return NullKind::GZero;
  if (s == "h" || s == "h_zero") return NullKind::HZero;
  if (s == "gh" || s == "g_and_h_zero") return NullKind::GAndHZero;
  throw DomainError("unknown null '" + std::string(s) + "' (expected g, h or gh)");
}

double chisq_cdf(int df, double x) {
  if (df < 0) throw DomainError("chi-square degrees of freedom must be nonnegative");
  if (x < 0.0) return 0.0;
  if (df == 0) return 1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(int df, double x) {
  if (df < 0) throw DomainError("chi-square degrees of freedom must be nonnegative");
  if (x < 0.0) return 1.0;
  if (df == 0) return 0.0;
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

void MixedChiSq::validate() const {
  if (!(weight0 >= 0.0 && weight0 <= 1.0)) throw DomainError("mixture weight must lie in [0,1]");
  if (df_a < 0 || df_b < 0) throw DomainError("chi-square degrees of freedom must be nonnegative");
}

double MixedChiSq::cdf(double x) const {
  return weight0 * chisq_cdf(df_a, x) + (1.0 - weight0) * chisq_cdf(df_b, x);
}

double MixedChiSq::sf(double x) const {
  return weight0 * chisq_sf(df_a, x) + (1.0 - weight0) * chisq_sf(df_b, x);
}

MixedChiSq reference_distribution(NullKind k) {
  switch (k) {
    case NullKind::GZero: return {1.0, 1, 1};
    case NullKind::HZero: return {0.5, 0, 1};
    case NullKind::GAndHZero: return {0.5, 1, 2};
  }
  throw DomainError("unknown null");
}

double mixed_chisq_sf(const MixedChiSq& d, double x) {
  d.validate();
  return std::clamp(d.sf(x), 0.0, 1.0);
}

double mixed_chisq_quantile(const MixedChiSq& d, double prob) {
  d.validate();
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("mixed chi-square quantile: probability must lie in (0,1)");
  if (prob <= d.cdf(0.0)) return 0.0;
  // Work with the survival function so upper quantiles keep their accuracy.
  const double tail = 1.0 - prob;
  double lo = 0.0;
  double hi = 1.0;
  while (d.sf(hi) > tail) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (d.sf(mid) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

Box null_box(NullKind null) {
  Box box = parameter_box();
  if (null == NullKind::GZero || null == NullKind::GAndHZero) box.fixed[2] = true;
  if (null == NullKind::HZero || null == NullKind::GAndHZero) box.fixed[3] = true;
  return box;
}

GhParams null_start(const Sample& s, NullKind null) {
  GhParams start = default_start(s);
  const Box box = null_box(null);
  if (box.fixed[2]) start.g = 0.0;
  if (box.fixed[3]) start.h = 0.0;
  return start;
}

bool in_null(const GhParams& p, NullKind null) {
  switch (null) {
    case NullKind::GZero: return p.g == 0.0;
    case NullKind::HZero: return p.h == 0.0;
    case NullKind::GAndHZero: return p.g == 0.0 && p.h == 0.0;
  }
  return false;
}

}  // namespace

FitResult fit_restricted(const Sample& s, NullKind null, const GridConfig& cfg,
                         const OptimizerOptions& opt) {
  if (s.size() < 5) throw DegenerateSample("insufficient sample: need at least 5 observations");
  cfg.validate();
  GridConfig used = cfg;
  const GhParams start = repair_start(s, null_start(s, null), used);
  return fit_male_in_box(s, used, start, null_box(null), opt);
}

AlrtResult alrt(const Sample& s, NullKind null, const GridConfig& cfg, double level,
                const OptimizerOptions& opt) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("test level must lie in (0,1)");
  if (s.size() < 5) throw DegenerateSample("insufficient sample: need at least 5 observations");
  cfg.validate();

  // Both suprema must be taken over the same approximated likelihood, so the
  // grid is fixed first from both starting points.
  GridConfig grid = cfg;
  const GhParams full_start = repair_start(s, default_start(s), grid);
  GhParams null_init = null_start(s, null);
  GridConfig null_grid = grid;
  null_init = repair_start(s, null_init, null_grid);
  GhParams full_init = full_start;
  if (null_grid.bn != grid.bn) {
    grid = null_grid;
    full_init = repair_start(s, full_start, grid);
  }

  AlrtResult out;
  out.null = null;
  out.level = level;
  out.restricted_fit = fit_male_in_box(s, grid, null_init, null_box(null), opt);
  out.full_fit = fit_male_in_box(s, grid, full_init, parameter_box(), opt);
  if (out.restricted_fit.objective > out.full_fit.objective) {
    // The restricted optimum is feasible for the full problem; restart there.
    FitResult refit =
        fit_male_in_box(s, grid, out.restricted_fit.theta_hat, parameter_box(), opt);
    if (refit.objective > out.full_fit.objective) out.full_fit = std::move(refit);
  }
  if (in_null(out.full_fit.theta_hat, null) &&
      out.full_fit.objective > out.restricted_fit.objective) {
    // The full optimum lies in the null set, so the two suprema coincide.
    out.restricted_fit.theta_hat = out.full_fit.theta_hat;
    out.restricted_fit.objective = out.full_fit.objective;
  }

  double d = -2.0 * (out.restricted_fit.objective - out.full_fit.objective);
  if (d < 0.0) {
    out.clamped = -d;
    out.clamp_flagged = out.clamped > kClampFlagTol;
    d = 0.0;
  }
  out.d_n = d;
  out.ref_dist = reference_distribution(null);
  out.critical_value = mixed_chisq_quantile(out.ref_dist, 1.0 - level);
  out.p_value = mixed_chisq_sf(out.ref_dist, d);
  out.reject = d > out.critical_value;
  out.converged = out.restricted_fit.converged && out.full_fit.converged;
  return out;
}

DrawMatrix asymptotic_distribution(const Mat4& info, bool boundary, std::size_t n_draws,
                                   std::uint64_t seed) {
  Eigen::LLT<Mat4> info_llt(info);
  if (info_llt.info() != Eigen::Success || !info.allFinite()) {
    throw SingularInformation("information matrix is not positive definite");
  }
  const Mat4 cov = info_llt.solve(Mat4::Identity());
  Eigen::LLT<Mat4> cov_llt(0.5 * (cov + cov.transpose()));
  if (cov_llt.info() != Eigen::Success) {
    throw SingularInformation("inverse information is not positive definite");
  }
  const Mat4 root = cov_llt.matrixL();

  NormalStream stream(seed);
  DrawMatrix draws(static_cast<Eigen::Index>(n_draws), 4);
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    Vec4 u;
    for (int j = 0; j < 4; ++j) u[j] = stream.next();
    Vec4 z = root * u;
    if (boundary && !(z[3] > 0.0)) {
      for (int j = 0; j < 3; ++j) z[j] -= cov(j, 3) / cov(3, 3) * z[3];
      z[3] = 0.0;
    }
    draws.row(r) = z.transpose();
  }
  return draws;
}

DrawMatrix asymptotic_estimator_draws(const GhParams& theta_hat, const Mat4& info, std::size_t n,
                                      bool boundary, std::size_t n_draws, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be positive");
  DrawMatrix draws = asymptotic_distribution(info, boundary, n_draws, seed);
  const Vec4 centre = to_vector(theta_hat);
  const double inv_root_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    draws.row(r) = (centre + inv_root_n * draws.row(r).transpose()).transpose();
  }
  return draws;
}

double s_n_statistic(const Sample& s, const GhParams& p0) {
  p0.validate();
  double score = 0.0;
  const bool g0 = std::abs(p0.g) < kGSwitch;
  for (double y : s.values()) {
    const double z = tau_inverse((y - p0.xi) / p0.omega, p0.g, p0.h);
    if (!std::isfinite(z)) throw DomainError("observation outside the support at p0");
    const double sf = skew_factor(z, p0.g);
    const double spread = (g0 ? 1.0 : std::exp(p0.g * z)) + p0.h * z * sf;
    const double explicit_dh = -0.5 * z * z - z * sf / spread;
    // z = tau^{-1}(x; h): dz/dh = -(d tau/dh) / tau'(z) = -sf z^2 / (2 spread)
    const double dz_dh = -sf * z * z / (2.0 * spread);
    score += explicit_dh + dvarphi_dz(z, p0) * dz_dh;
  }
  return score / std::sqrt(static_cast<double>(s.size()));
}

double s_n_normal_closed_form(std::span<const double> z) {
  if (z.empty()) throw DomainError("empty input");
  double sum = 0.0;
  for (double v : z) sum += v * v * v * v / 3.0 - v * v;
  return 1.5 * sum / std::sqrt(static_cast<double>(z.size()));
}

}  // namespace tgh
