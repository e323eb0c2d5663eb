#include "tgh/approx_lik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tgh/errors.hpp"

namespace tgh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Partial derivatives of varphi(z; theta) in theta with z held fixed.
struct ExplicitPartials {
  double value;
  double dz;
  double dg;
  double dh;
};

ExplicitPartials varphi_partials(double z, const GhParams& p) {
  const bool g0 = std::abs(p.g) < kGSwitch;
  const double e = g0 ? 1.0 : std::exp(p.g * z);
  const double sf = skew_factor(z, p.g);
  const double spread = e + p.h * z * sf;
  const double dspread_dg = z * e + p.h * z * skew_factor_dg(z, p.g);
  ExplicitPartials out;
  out.value = varphi(z, p);
  out.dz = -(1.0 + p.h) * z - (g0 ? 0.0 : p.g) - p.h * (sf + z) / spread;
  out.dg = -dspread_dg / spread;
  out.dh = -0.5 * z * z - z * sf / spread;
  return out;
}

// d Y_k / d theta for a knot at score z.
Vec4 knot_sensitivity(double z, const GhParams& p) {
  const double stretch = std::exp(0.5 * p.h * z * z);
  const double t = skew_factor(z, p.g) * stretch;
  return {1.0, t, p.omega * stretch * skew_factor_dg(z, p.g), 0.5 * p.omega * t * z * z};
}

LoglikValue evaluate(const Sample& s, const GhParams& p, const GridConfig& cfg, bool want_grad) {
  p.validate();
  const KnotGrid grid = build_grid(p, cfg, s.size());
  LoglikValue out{kNegInf, Vec4::Zero()};
  if (!grid.finite() || !grid.covers(s)) return out;

  const auto values = s.values();
  const std::size_t last_cell = grid.size() - 2;
  std::size_t k = 0;
  double total = 0.0;
  Vec4 grad = Vec4::Zero();
  // Sensitivities of the current cell's two knots, refreshed when k moves.
  std::size_t cached = std::numeric_limits<std::size_t>::max();
  Vec4 d_left, d_right;

  for (double y : values) {
    while (k < last_cell && y >= grid.y[k + 1]) ++k;
    const double width = grid.y[k + 1] - grid.y[k];
    const double t = (y - grid.y[k]) / width;
    const double z = grid.z[k] + t * grid.spacing;
    if (!want_grad) {
      total += varphi(z, p);
      continue;
    }
    const ExplicitPartials part = varphi_partials(z, p);
    total += part.value;
    if (cached != k) {
      d_left = knot_sensitivity(grid.z[k], p);
      d_right = knot_sensitivity(grid.z[k + 1], p);
      cached = k;
    }
    const Vec4 dz = -(grid.spacing / width) * ((1.0 - t) * d_left + t * d_right);
    grad += part.dz * dz;
    grad[1] -= 1.0 / p.omega;
    grad[2] += part.dg;
    grad[3] += part.dh;
  }
  out.value = total;
  out.grad = grad;
  return out;
}

}  // namespace

std::size_t GridConfig::knots_for(std::size_t n) const {
  return kn != 0 ? kn : std::max<std::size_t>(1000, n);
}

void GridConfig::validate() const {
  if (!(bn > 0.0) || !std::isfinite(bn)) throw DomainError("bn must be positive");
  if (kn != 0 && kn < 3) throw DomainError("kn must be at least 3");
}

bool KnotGrid::finite() const {
  return std::isfinite(y.front()) && std::isfinite(y.back());
}

bool KnotGrid::covers(const Sample& s) const {
  return y.front() <= s.min() && s.min() < s.max() && s.max() <= y.back();
}

KnotGrid build_grid(const GhParams& p, double bn, std::size_t kn) {
  GridConfig{bn, kn}.validate();
  if (kn < 3) throw DomainError("kn must be at least 3");
  KnotGrid grid;
  grid.z.resize(kn);
  grid.y.resize(kn);
  grid.spacing = 2.0 * bn / static_cast<double>(kn - 1);
  for (std::size_t k = 0; k < kn; ++k) {
    const double z = -bn + grid.spacing * static_cast<double>(k);
    grid.z[k] = z;
    grid.y[k] = p.xi + p.omega * tau(z, p.g, p.h);
  }
  grid.z.back() = bn;
  grid.y.back() = p.xi + p.omega * tau(bn, p.g, p.h);
  return grid;
}

KnotGrid build_grid(const GhParams& p, const GridConfig& cfg, std::size_t n) {
  cfg.validate();
  return build_grid(p, cfg.bn, cfg.knots_for(n));
}

std::vector<std::size_t> bin_assign(const Sample& s, const KnotGrid& grid) {
  if (grid.size() < 3) throw DomainError("grid needs at least 3 knots");
  if (s.min() < grid.y.front() || s.max() > grid.y.back()) {
    throw SupportViolation("observation outside the transformed knot range");
  }
  const std::size_t last_cell = grid.size() - 2;
  std::vector<std::size_t> bins(s.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (k < last_cell && s[i] >= grid.y[k + 1]) ++k;
    bins[i] = k;
  }
  return bins;
}

double z_tilde(double y, std::size_t k, const KnotGrid& grid) {
  const double t = (y - grid.y[k]) / (grid.y[k + 1] - grid.y[k]);
  return grid.z[k] + t * (grid.z[k + 1] - grid.z[k]);
}

double approx_loglik(const Sample& s, const GhParams& p, const GridConfig& cfg) {
  return evaluate(s, p, cfg, false).value;
}

LoglikValue approx_loglik_with_grad(const Sample& s, const GhParams& p, const GridConfig& cfg) {
  return evaluate(s, p, cfg, true);
}

Vec4 approx_loglik_grad(const Sample& s, const GhParams& p, const GridConfig& cfg) {
  const LoglikValue v = evaluate(s, p, cfg, true);
  if (!std::isfinite(v.value)) {
    throw SupportViolation("approximated log-likelihood is -infinity at this parameter");
  }
  return v.grad;
}

Mat4 observed_information(const Sample& s, const GhParams& p, const GridConfig& cfg) {
  const Vec4 theta = to_vector(p);
  Mat4 hess;
  for (int j = 0; j < 4; ++j) {
    const double step = 1e-4 * (1.0 + std::abs(theta[j]));
    Vec4 up = theta;
    Vec4 down = theta;
    up[j] += step;
    down[j] -= step;
    // h (and omega) must stay inside the parameter space.
    const bool one_sided = (j == 3 && down[j] < 0.0) || (j == 1 && down[j] <= 0.0);
    if (one_sided) down[j] = theta[j];
    const Vec4 g_up = approx_loglik_grad(s, to_params(up), cfg);
    const Vec4 g_down = approx_loglik_grad(s, to_params(down), cfg);
    hess.col(j) = (g_up - g_down) / (up[j] - down[j]);
  }
  Mat4 info = -0.5 * (hess + hess.transpose());
  return info;
}

GhParams to_params(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

Vec4 to_vector(const GhParams& p) { return {p.xi, p.omega, p.g, p.h}; }

}  // namespace tgh
