#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgh/approx_lik.hpp"
#include "tgh/ghdist.hpp"
#include "tgh/optimizer.hpp"

namespace tgh {

enum class Method { LV, QLS, MALE, NMLE };

std::string_view method_name(Method m);
// Accepts "lv", "qls", "male", "nmle" (case-insensitive). Throws DomainError.
Method parse_method(std::string_view name);

inline constexpr double kOmegaFloor = 1e-8;

struct FitResult {
  GhParams theta_hat;
  // Log-likelihood (MALE, NMLE) or loss (LV residual SS, QLS) at the optimum.
  double objective = 0.0;
  Method method = Method::MALE;
  bool converged = false;
  int iterations = 0;
  std::optional<Mat4> info_matrix;  // observed information I_n (MALE, NMLE)
  std::optional<Vec4> std_errors;   // sqrt(diag(I_n^{-1}))
  bool h_at_boundary = false;       // theta_hat.h == 0
  GridConfig grid;                  // grid actually used (MALE)
  std::string message;

  // Throws NonConvergence carrying the diagnostics when !converged.
  const FitResult& require_converged() const;
};

// Strictly increasing probabilities in (0,1).
class QuantileSet {
 public:
  explicit QuantileSet(std::vector<double> probs);

  // (0.005, 0.01, 0.025, 0.05, 0.10, 0.25)
  static QuantileSet letter_values();
  // p_i = (i - 1/3) / (m + 1/3), i = 1..m
  static QuantileSet qls_default(int m = 10);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

// Order-statistic interpolation at position 1 + (n-1) * prob.
double sample_quantile(const Sample& s, double prob);

FitResult fit_lv(const Sample& s, const QuantileSet& qs = QuantileSet::letter_values());

FitResult fit_qls(const Sample& s, const QuantileSet& qs = QuantileSet::qls_default(),
                  std::optional<GhParams> init = std::nullopt, const OptimizerOptions& opt = {});

// Box over (xi, omega, g, h): omega >= kOmegaFloor, h >= 0.
Box parameter_box();

// Starting point for likelihood fits: LV, or a robust location/scale start
// when the letter-value recipe degenerates.
GhParams default_start(const Sample& s);

// Start satisfying the support check on cfg's grid: inflates omega by 1.5 up
// to 20 times, then retries once with bn widened to 15. Updates cfg.bn when
// widened. Throws InitializationFailure.
GhParams repair_start(const Sample& s, GhParams start, GridConfig& cfg);

FitResult fit_male(const Sample& s, const GridConfig& cfg = {},
                   std::optional<GhParams> init = std::nullopt, const OptimizerOptions& opt = {});

// MALE over a caller-supplied box (frozen coordinates keep their start value).
// The start must already pass the support check on cfg's grid.
FitResult fit_male_in_box(const Sample& s, const GridConfig& cfg, const GhParams& start,
                          const Box& box, const OptimizerOptions& opt = {});

// Maximizes the exact log-likelihood sum_i log f(y_i), one root solve per
// observation per evaluation; gradient by central differences.
FitResult fit_nmle(const Sample& s, std::optional<GhParams> init = std::nullopt,
                   double tol = kDefaultRootTol, const OptimizerOptions& opt = {});

FitResult fit_nmle_in_box(const Sample& s, const GhParams& start, const Box& box,
                          double tol = kDefaultRootTol, const OptimizerOptions& opt = {});

double exact_loglik(const Sample& s, const GhParams& p, double tol = kDefaultRootTol);

}  // namespace tgh
