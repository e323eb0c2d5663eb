#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tgh/estimators.hpp"
#include "tgh/inference.hpp"
#include "tgh/report.hpp"

namespace tgh {

struct StudyConfig {
  GhParams theta0{3.0, 3.0, 0.5, 0.2};
  std::vector<std::size_t> sample_sizes{1000};
  std::size_t replicates = 200;
  std::uint64_t seed = 20240601;
  std::vector<Method> methods{Method::LV, Method::QLS, Method::MALE};
  GridConfig grid;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Seed of replicate r at sample size n for a study stream.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                             std::size_t r);

struct RecoveryCell {
  std::size_t n = 0;
  Method method = Method::MALE;
  Vec4 mean = Vec4::Zero();
  Vec4 se = Vec4::Zero();  // empirical SE across converged replicates (NaN if < 2)
  Vec4 theoretical_se = Vec4::Zero();
  std::size_t converged = 0;
  std::size_t failures = 0;
  bool degenerate = false;  // fewer than two converged replicates
};

struct RecoveryReport {
  std::vector<RecoveryCell> cells;
  Mat4 reference_info = Mat4::Zero();  // per-observation information at theta0
  std::size_t reference_n = 0;

  const RecoveryCell& cell(std::size_t n, Method m) const;
  StudyReport to_report(const StudyConfig& cfg) const;
};

// Per (n, method): empirical SEs of the estimates, against sqrt(diag(I^{-1})/n)
// where I is the per-observation observed information on one reference sample
// of size reference_n drawn at theta0.
RecoveryReport run_recovery_study(const StudyConfig& cfg, std::size_t reference_n = 100000);

// Observed information per observation at theta0 from one large sample.
Mat4 reference_information(const GhParams& theta0, std::size_t reference_n, std::uint64_t seed,
                           const GridConfig& grid = {});

struct PowerCell {
  NullKind null = NullKind::GZero;
  double d = 0.0;
  std::size_t n = 0;
  GhParams theta;
  double level = 0.05;
  std::size_t rejections = 0;
  std::size_t converged = 0;
  std::size_t failures = 0;
  double rate = 0.0;  // rejections / converged
};

struct PowerReport {
  std::vector<PowerCell> cells;

  const PowerCell& cell(double d, std::size_t n, double level) const;
  StudyReport to_report(const StudyConfig& cfg) const;
};

// Data-generating parameter for the local alternative d / sqrt(n): xi and
// omega from base; G_ZERO: g = d/sqrt(n), h = base.h; H_ZERO: g = base.g,
// h = d/sqrt(n); G_AND_H_ZERO: g = 3d/sqrt(n), h = d/sqrt(n).
GhParams local_alternative(NullKind null, double d, std::size_t n, const GhParams& base);

PowerReport run_power_study(NullKind null, const std::vector<double>& d_values,
                            const StudyConfig& cfg, const std::vector<double>& levels);

struct TimingCell {
  std::size_t n = 0;
  double mean_male_seconds = 0.0;
  double mean_nmle_seconds = 0.0;
  double mean_ratio = 0.0;  // mean over replicates of nmle/male
  std::size_t converged = 0;
  std::size_t failures = 0;
};

struct TimingReport {
  std::vector<TimingCell> cells;

  const TimingCell& cell(std::size_t n) const;
  StudyReport to_report(const StudyConfig& cfg) const;
};

TimingReport run_timing_study(const StudyConfig& cfg);

struct BoundaryCell {
  double g0 = 0.0;
  std::size_t n = 0;
  double p0 = 0.0;  // fraction with h_hat == 0
  double c0 = 0.0;  // fraction with S_n < 0
  std::size_t converged = 0;
  std::size_t failures = 0;
};

struct BoundaryReport {
  std::vector<BoundaryCell> cells;

  const BoundaryCell& cell(double g0, std::size_t n) const;
  StudyReport to_report(const StudyConfig& cfg) const;
};

// Requires cfg.theta0.h == 0 (DomainError otherwise).
BoundaryReport run_boundary_study(const std::vector<double>& g0_values, const StudyConfig& cfg);

}  // namespace tgh
