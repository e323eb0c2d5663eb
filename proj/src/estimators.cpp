#include "tgh/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "tgh/errors.hpp"
#include "tgh/normal.hpp"

namespace tgh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void attach_information(FitResult& fit, const Mat4& info) {
  if (!info.allFinite()) return;
  fit.info_matrix = info;
  Eigen::LLT<Mat4> llt(info);
  if (llt.info() != Eigen::Success) return;
  const Mat4 cov = llt.solve(Mat4::Identity());
  fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

void require_sample_size(const Sample& s, std::size_t n_min) {
  if (s.size() < n_min) {
    throw DegenerateSample("insufficient sample: need at least " + std::to_string(n_min) +
                           " observations, got " + std::to_string(s.size()));
  }
}

// Central-difference gradient of the exact log-likelihood; one-sided where
// a step would leave the parameter space or the support.
Vec4 exact_loglik_fd_grad(const Sample& s, const Vec4& x, double fx, double tol) {
  Vec4 grad;
  for (int j = 0; j < 4; ++j) {
    const double step = 1e-6 * (1.0 + std::abs(x[j]));
    Vec4 up = x;
    Vec4 down = x;
    up[j] += step;
    down[j] -= step;
    const bool down_ok = !(j == 3 && down[j] < 0.0) && !(j == 1 && down[j] <= 0.0);
    const double f_up = exact_loglik(s, to_params(up), tol);
    const double f_down = down_ok ? exact_loglik(s, to_params(down), tol) : kNegInf;
    if (std::isfinite(f_up) && std::isfinite(f_down)) {
      grad[j] = (f_up - f_down) / (2.0 * step);
    } else if (std::isfinite(f_up)) {
      grad[j] = (f_up - fx) / step;
    } else if (std::isfinite(f_down)) {
      grad[j] = (fx - f_down) / step;
    } else {
      grad[j] = 0.0;
    }
  }
  return grad;
}

FitResult from_record(const OptimumRecord& rec, Method method, double objective_sign) {
  FitResult fit;
  fit.method = method;
  fit.theta_hat = to_params(rec.x);
  fit.objective = objective_sign * rec.value;
  fit.converged = rec.converged;
  fit.iterations = rec.iterations;
  fit.h_at_boundary = fit.theta_hat.h == 0.0;
  fit.message = rec.message;
  return fit;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::LV: return "LV";
    case Method::QLS: return "QLS";
    case Method::MALE: return "MALE";
    case Method::NMLE: return "NMLE";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "lv") return Method::LV;
  if (lower == "qls") return Method::QLS;
  if (lower == "male") return Method::MALE;
  if (lower == "nmle") return Method::NMLE;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

const FitResult& FitResult::require_converged() const {
  if (!converged) {
    throw NonConvergence(std::string(method_name(method)) + " fit did not converge after " +
                         std::to_string(iterations) + " iterations: " + message);
  }
  return *this;
}

QuantileSet::QuantileSet(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DomainError("quantile set is empty");
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0 && probs_[i] < 1.0)) throw DomainError("quantile probabilities must lie in (0,1)");
    if (i > 0 && !(probs_[i] > probs_[i - 1])) {
      throw DomainError("quantile probabilities must be strictly increasing");
    }
  }
}

QuantileSet QuantileSet::letter_values() {
  return QuantileSet({0.005, 0.01, 0.025, 0.05, 0.10, 0.25});
}

QuantileSet QuantileSet::qls_default(int m) {
  if (m < 1) throw DomainError("qls quantile count must be positive");
  std::vector<double> p(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) p[i - 1] = (i - 1.0 / 3.0) / (m + 1.0 / 3.0);
  return QuantileSet(std::move(p));
}

double sample_quantile(const Sample& s, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("sample_quantile: probability must lie in (0,1)");
  const std::size_t n = s.size();
  const double pos = static_cast<double>(n - 1) * prob;  // zero-based position
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return s[n - 1];
  return (1.0 - frac) * s[lo] + frac * s[lo + 1];
}

FitResult fit_lv(const Sample& s, const QuantileSet& qs) {
  for (double p : qs.probs()) {
    if (!(p < 0.5)) throw DomainError("letter-value probabilities must be below 1/2");
  }
  require_sample_size(s, 2);
  const double q_mid = sample_quantile(s, 0.5);
  const std::size_t k_count = qs.size();
  std::vector<double> lower(k_count), upper(k_count), z(k_count), g_k(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double p = qs.probs()[k];
    lower[k] = sample_quantile(s, p);
    upper[k] = sample_quantile(s, 1.0 - p);
    z[k] = normal::quantile(p);
    const double up_spread = upper[k] - q_mid;
    const double low_spread = q_mid - lower[k];
    if (!(up_spread > 0.0) || !(low_spread > 0.0)) {
      throw DegenerateSample("letter values: zero quantile spacing at p=" + std::to_string(p));
    }
    g_k[k] = -std::log(up_spread / low_spread) / z[k];
  }
  const double g_hat = median_of(g_k);

  // log{ g (q_p - q_{1-p}) / (exp(g z) - exp(-g z)) } = log omega + h z^2/2
  std::vector<double> x(k_count), r(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double width = lower[k] - upper[k];
    const double ratio = std::abs(g_hat) < kGSwitch
                             ? width / (2.0 * z[k])
                             : g_hat * width / (2.0 * std::sinh(g_hat * z[k]));
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
      throw DegenerateSample("letter values: nonpositive log argument in spread regression");
    }
    x[k] = 0.5 * z[k] * z[k];
    r[k] = std::log(ratio);
  }
  const double x_bar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k_count);
  const double r_bar = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(k_count);
  double sxx = 0.0;
  double sxr = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    sxx += (x[k] - x_bar) * (x[k] - x_bar);
    sxr += (x[k] - x_bar) * (r[k] - r_bar);
  }
  const double slope = sxx > 0.0 ? sxr / sxx : 0.0;
  const double intercept = r_bar - slope * x_bar;
  double rss = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double e = r[k] - intercept - slope * x[k];
    rss += e * e;
  }

  FitResult fit;
  fit.method = Method::LV;
  fit.theta_hat = {q_mid, std::exp(intercept), g_hat, std::max(slope, 0.0)};
  fit.objective = rss;
  fit.converged = true;
  fit.h_at_boundary = fit.theta_hat.h == 0.0;
  fit.message = "closed form";
  return fit;
}

Box parameter_box() {
  Box box;
  box.lower[1] = kOmegaFloor;
  box.lower[3] = 0.0;
  return box;
}

FitResult fit_qls(const Sample& s, const QuantileSet& qs, std::optional<GhParams> init,
                  const OptimizerOptions& opt) {
  if (qs.size() < 4) throw DomainError("QLS needs at least four quantiles");
  require_sample_size(s, 2);
  const std::size_t k_count = qs.size();
  std::vector<double> target(k_count), z(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    target[k] = sample_quantile(s, qs.probs()[k]);
    z[k] = normal::quantile(qs.probs()[k]);
  }
  const GhParams start = init ? *init : default_start(s);

  const Objective objective = [&](const Vec4& v) {
    const GhParams p = to_params(v);
    double loss = 0.0;
    Vec4 dloss = Vec4::Zero();
    for (std::size_t k = 0; k < k_count; ++k) {
      const double stretch = std::exp(0.5 * p.h * z[k] * z[k]);
      const double t = skew_factor(z[k], p.g) * stretch;
      const double resid = target[k] - (p.xi + p.omega * t);
      loss += resid * resid;
      const Vec4 dq{1.0, t, p.omega * stretch * skew_factor_dg(z[k], p.g),
                    0.5 * p.omega * t * z[k] * z[k]};
      dloss -= 2.0 * resid * dq;
    }
    return Evaluation{-loss, -dloss};
  };
  const OptimumRecord rec = optimize_box(objective, to_vector(start), parameter_box(), opt);
  return from_record(rec, Method::QLS, -1.0);
}

GhParams default_start(const Sample& s) {
  try {
    return fit_lv(s).theta_hat;
  } catch (const DegenerateSample&) {
    const double iqr = sample_quantile(s, 0.75) - sample_quantile(s, 0.25);
    double scale = iqr / 1.3489795003921634;
    if (!(scale > 0.0)) scale = std::max(s.max() - s.min(), 1.0);
    return {sample_quantile(s, 0.5), scale, 0.0, 0.0};
  }
}

GhParams repair_start(const Sample& s, GhParams start, GridConfig& cfg) {
  start.validate();
  const std::size_t kn = cfg.knots_for(s.size());
  for (const double bn : {cfg.bn, std::max(cfg.bn, 15.0)}) {
    GhParams trial = start;
    for (int attempt = 0; attempt <= 20; ++attempt) {
      const KnotGrid grid = build_grid(trial, bn, kn);
      if (grid.finite() && grid.covers(s)) {
        cfg.bn = bn;
        return trial;
      }
      trial.omega *= 1.5;
    }
  }
  throw InitializationFailure("no starting value satisfies the support check");
}

FitResult fit_male_in_box(const Sample& s, const GridConfig& cfg, const GhParams& start,
                          const Box& box, const OptimizerOptions& opt) {
  const Objective objective = [&](const Vec4& v) {
    const LoglikValue lv = approx_loglik_with_grad(s, to_params(v), cfg);
    return Evaluation{lv.value, lv.grad};
  };
  const OptimumRecord rec = optimize_box(objective, to_vector(start), box, opt);
  FitResult fit = from_record(rec, Method::MALE, 1.0);
  fit.grid = cfg;
  try {
    attach_information(fit, observed_information(s, fit.theta_hat, cfg));
  } catch (const SupportViolation&) {
    // Optimum sits on the edge of the support region; no curvature estimate.
  }
  return fit;
}

FitResult fit_male(const Sample& s, const GridConfig& cfg, std::optional<GhParams> init,
                   const OptimizerOptions& opt) {
  require_sample_size(s, 5);
  cfg.validate();
  GridConfig used = cfg;
  const GhParams start = repair_start(s, init ? *init : default_start(s), used);
  return fit_male_in_box(s, used, start, parameter_box(), opt);
}

double exact_loglik(const Sample& s, const GhParams& p, double tol) {
  double total = 0.0;
  for (double y : s.values()) {
    total += log_density_exact(y, p, tol);
    if (!std::isfinite(total)) return kNegInf;
  }
  return total;
}

FitResult fit_nmle(const Sample& s, std::optional<GhParams> init, double tol,
                   const OptimizerOptions& opt) {
  require_sample_size(s, 5);
  GhParams start = init ? *init : default_start(s);
  start.validate();
  if (!std::isfinite(exact_loglik(s, start, tol))) {
    // Only possible with h = 0 and g != 0 (bounded support).
    start.h = std::max(start.h, 0.01);
  }
  return fit_nmle_in_box(s, start, parameter_box(), tol, opt);
}

FitResult fit_nmle_in_box(const Sample& s, const GhParams& start, const Box& box, double tol,
                          const OptimizerOptions& opt) {
  require_sample_size(s, 5);
  const Objective objective = [&](const Vec4& v) {
    const double fx = exact_loglik(s, to_params(v), tol);
    if (!std::isfinite(fx)) return Evaluation{kNegInf, Vec4::Zero()};
    return Evaluation{fx, exact_loglik_fd_grad(s, v, fx, tol)};
  };
  const OptimumRecord rec = optimize_box(objective, to_vector(start), box, opt);
  FitResult fit = from_record(rec, Method::NMLE, 1.0);

  // Information by differencing the finite-difference gradient.
  const Vec4 theta = rec.x;
  Mat4 hess;
  for (int j = 0; j < 4; ++j) {
    const double step = 1e-4 * (1.0 + std::abs(theta[j]));
    Vec4 up = theta;
    Vec4 down = theta;
    up[j] += step;
    down[j] -= step;
    if ((j == 3 && down[j] < 0.0) || (j == 1 && down[j] <= 0.0)) down[j] = theta[j];
    const double f_up = exact_loglik(s, to_params(up), tol);
    const double f_down = exact_loglik(s, to_params(down), tol);
    if (!std::isfinite(f_up) || !std::isfinite(f_down)) return fit;
    hess.col(j) = (exact_loglik_fd_grad(s, up, f_up, tol) - exact_loglik_fd_grad(s, down, f_down, tol)) /
                  (up[j] - down[j]);
  }
  attach_information(fit, -0.5 * (hess + hess.transpose()));
  return fit;
}

}  // namespace tgh
