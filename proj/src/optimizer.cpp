#include "tgh/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "tgh/errors.hpp"

namespace tgh {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
// Line-search breakdown is accepted as convergence below this relative
// projected-gradient size (the objective may be only piecewise smooth).
constexpr double kStallTol = 1e-5;

}  // namespace

bool Box::contains(const Vec4& x) const {
  for (int i = 0; i < 4; ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

Vec4 Box::project(const Vec4& x) const {
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = std::clamp(x[i], lower[i], upper[i]);
  return out;
}

OptimumRecord optimize_box(const Objective& f, const Vec4& x0, const Box& box,
                           const OptimizerOptions& opt) {
  OptimumRecord rec;
  Vec4 x = box.project(x0);
  Evaluation cur = f(x);
  ++rec.evaluations;
  if (!std::isfinite(cur.value)) {
    throw DomainError("optimize_box: objective is not finite at the starting point");
  }

  // Work on F = -f (minimization).
  auto descent_grad = [&](const Evaluation& e) {
    Vec4 g = -e.grad;
    for (int i = 0; i < 4; ++i) {
      if (box.fixed[i]) g[i] = 0.0;
    }
    return g;
  };

  Mat4 inv_hess = Mat4::Identity();
  bool scaled = false;
  bool reset_tried = false;
  int small_changes = 0;
  Vec4 g = descent_grad(cur);

  auto finish = [&](bool converged, std::string msg, double pg_norm) {
    rec.x = x;
    rec.value = cur.value;
    rec.grad = cur.grad;
    rec.converged = converged;
    rec.projected_grad_norm = pg_norm;
    rec.message = std::move(msg);
    for (int i = 0; i < 4; ++i) {
      rec.at_lower[i] = x[i] <= box.lower[i];
      rec.at_upper[i] = x[i] >= box.upper[i];
    }
    return rec;
  };

  for (int iter = 0;; ++iter) {
    rec.iterations = iter;
    std::array<bool, 4> active{};
    Vec4 pg = g;
    for (int i = 0; i < 4; ++i) {
      active[i] = box.fixed[i] || (x[i] <= box.lower[i] && g[i] > 0.0) ||
                  (x[i] >= box.upper[i] && g[i] < 0.0);
      if (active[i]) pg[i] = 0.0;
    }
    const double pg_norm = pg.cwiseAbs().maxCoeff();
    const double fscale = std::max(1.0, std::abs(cur.value));
    if (pg_norm <= opt.tol * fscale) return finish(true, "projected gradient below tolerance", pg_norm);
    if (iter >= opt.max_iter) return finish(false, "iteration cap reached", pg_norm);

    Mat4 h_free = inv_hess;
    for (int i = 0; i < 4; ++i) {
      if (!active[i]) continue;
      h_free.row(i).setZero();
      h_free.col(i).setZero();
    }
    Vec4 d = -h_free * pg;
    if (pg.dot(d) >= 0.0 || !d.allFinite()) {
      inv_hess.setIdentity();
      scaled = false;
      d = -pg;
    }
    double alpha = 1.0;
    if (!scaled) alpha = std::min(1.0, 1.0 / d.cwiseAbs().maxCoeff());

    bool accepted = false;
    Vec4 xt;
    Evaluation trial{};
    for (int bt = 0; bt < kMaxBacktracks; ++bt, alpha *= 0.5) {
      xt = box.project(x + alpha * d);
      for (int i = 0; i < 4; ++i) {
        if (box.fixed[i]) xt[i] = x[i];
      }
      const Vec4 s = xt - x;
      if (s.cwiseAbs().maxCoeff() <= 1e-16 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
      trial = f(xt);
      ++rec.evaluations;
      if (!std::isfinite(trial.value)) continue;
      // Armijo on F = -f: F(xt) <= F(x) + c * grad_F . s
      if (-trial.value <= -cur.value + kArmijo * g.dot(s)) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!reset_tried) {
        reset_tried = true;
        inv_hess.setIdentity();
        scaled = false;
        continue;
      }
      const bool stalled_ok = pg_norm <= kStallTol * fscale;
      return finish(stalled_ok, stalled_ok ? "line search stalled at precision limit"
                                           : "line search failed",
                    pg_norm);
    }
    reset_tried = false;

    const Vec4 s = xt - x;
    const Vec4 gt = descent_grad(trial);
    const Vec4 yv = gt - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      if (!scaled) {
        inv_hess = Mat4::Identity() * (sy / yv.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Mat4 left = Mat4::Identity() - rho * s * yv.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * s * s.transpose();
    }

    const double change = std::abs(trial.value - cur.value);
    x = xt;
    cur = trial;
    g = gt;
    if (change <= opt.ftol * std::max(1.0, std::abs(cur.value))) {
      if (++small_changes >= 2) {
        rec.iterations = iter + 1;
        Vec4 pg_end = g;
        for (int i = 0; i < 4; ++i) {
          if (box.fixed[i] || (x[i] <= box.lower[i] && g[i] > 0.0) ||
              (x[i] >= box.upper[i] && g[i] < 0.0)) {
            pg_end[i] = 0.0;
          }
        }
        return finish(true, "relative objective change below ftol", pg_end.cwiseAbs().maxCoeff());
      }
    } else {
      small_changes = 0;
    }
  }
}

}  // namespace tgh
