#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "tgh/ghdist.hpp"

namespace tgh {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Knot layout for the approximated likelihood: kn equally spaced normal
// scores on [-bn, bn]. kn == 0 selects max(1000, n) for a sample of size n.
struct GridConfig {
  double bn = 10.0;
  std::size_t kn = 0;

  std::size_t knots_for(std::size_t n) const;
  void validate() const;
};

struct KnotGrid {
  std::vector<double> z;  // Z_1 < ... < Z_K
  std::vector<double> y;  // Y_k = xi + omega * tau(Z_k)
  double spacing = 0.0;

  std::size_t size() const { return z.size(); }
  bool finite() const;
  // Y_1 <= y_min < y_max <= Y_K
  bool covers(const Sample& s) const;
};

KnotGrid build_grid(const GhParams& p, double bn, std::size_t kn);
KnotGrid build_grid(const GhParams& p, const GridConfig& cfg, std::size_t n);

// Cell index k (0-based, 0 .. K-2) with y[k] <= y_i < y[k+1]; the last cell is
// closed on the right. One merge pass over the sorted sample and knots.
// Throws SupportViolation if an observation lies outside [Y_1, Y_K].
std::vector<std::size_t> bin_assign(const Sample& s, const KnotGrid& grid);

// Linear interpolation of the normal score inside cell k.
double z_tilde(double y, std::size_t k, const KnotGrid& grid);

// Approximated log-likelihood; -infinity when the knot range does not cover
// the sample.
double approx_loglik(const Sample& s, const GhParams& p, const GridConfig& cfg = {});

// Gradient in (xi, omega, g, h) of the function approx_loglik computes,
// including the dependence of the knot images on theta.
// Throws SupportViolation where approx_loglik is -infinity.
Vec4 approx_loglik_grad(const Sample& s, const GhParams& p, const GridConfig& cfg = {});

struct LoglikValue {
  double value;
  Vec4 grad;  // meaningful only when value is finite
};
LoglikValue approx_loglik_with_grad(const Sample& s, const GhParams& p, const GridConfig& cfg = {});

// Negative Hessian of approx_loglik by central differences of the analytic
// gradient (one-sided in h at the boundary), symmetrized.
Mat4 observed_information(const Sample& s, const GhParams& p, const GridConfig& cfg = {});

GhParams to_params(const Vec4& v);
Vec4 to_vector(const GhParams& p);

}  // namespace tgh
