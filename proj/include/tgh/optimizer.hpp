#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>

#include "tgh/approx_lik.hpp"

namespace tgh {

struct OptimizerOptions {
  // Converged when the projected gradient sup-norm is <= tol * max(1, |f|).
  double tol = 1e-8;
  // Also converged when an accepted step changes f by <= ftol * max(1, |f|).
  double ftol = 1e-13;
  int max_iter = 500;
};

struct Box {
  Vec4 lower = Vec4::Constant(-std::numeric_limits<double>::infinity());
  Vec4 upper = Vec4::Constant(std::numeric_limits<double>::infinity());
  // Frozen coordinates keep their starting value.
  std::array<bool, 4> fixed{false, false, false, false};

  bool contains(const Vec4& x) const;
  Vec4 project(const Vec4& x) const;
};

// Value and gradient of the objective to be MAXIMIZED. A value of -infinity
// marks an infeasible point; its gradient is ignored.
struct Evaluation {
  double value;
  Vec4 grad;
};
using Objective = std::function<Evaluation(const Vec4&)>;

struct OptimumRecord {
  Vec4 x;
  double value = -std::numeric_limits<double>::infinity();
  Vec4 grad = Vec4::Zero();
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double projected_grad_norm = 0.0;
  std::array<bool, 4> at_lower{false, false, false, false};
  std::array<bool, 4> at_upper{false, false, false, false};
  std::string message;
};

// Projected BFGS with backtracking (Armijo) line search. Every trial point is
// projected onto the box before evaluation; -infinity trial values shrink
// the step. Throws DomainError if f(x0) is not finite.
OptimumRecord optimize_box(const Objective& f, const Vec4& x0, const Box& box,
                           const OptimizerOptions& opt = {});

}  // namespace tgh
