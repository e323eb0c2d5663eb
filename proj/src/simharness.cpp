#include "tgh/simharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "tgh/errors.hpp"

namespace tgh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t {
  kRecoveryStream = 1,
  kReferenceStream = 2,
  kPowerStream = 3,
  kTimingStream = 4,
  kBoundaryStream = 5,
};

FitResult run_method(Method m, const Sample& s, const GridConfig& grid) {
  switch (m) {
    case Method::LV: return fit_lv(s);
    case Method::QLS: return fit_qls(s);
    case Method::MALE: return fit_male(s, grid);
    case Method::NMLE: return fit_nmle(s);
  }
  throw DomainError("unknown method");
}

nlohmann::ordered_json params_json(const GhParams& p) {
  return {{"xi", p.xi}, {"omega", p.omega}, {"g", p.g}, {"h", p.h}};
}

constexpr const char* kParamNames[4] = {"xi", "omega", "g", "h"};

}  // namespace

void StudyConfig::validate() const {
  theta0.validate();
  grid.validate();
  if (replicates < 1) throw DomainError("replicates must be at least 1");
  if (sample_sizes.empty()) throw DomainError("at least one sample size is required");
  for (std::size_t n : sample_sizes) {
    if (n < 10) throw DomainError("sample sizes must be at least 10");
  }
}

nlohmann::ordered_json StudyConfig::to_json() const {
  nlohmann::ordered_json j;
  j["theta0"] = params_json(theta0);
  j["sample_sizes"] = sample_sizes;
  j["replicates"] = replicates;
  j["seed"] = seed;
  std::vector<std::string> names;
  for (Method m : methods) names.emplace_back(method_name(m));
  j["methods"] = names;
  j["bn"] = grid.bn;
  j["kn"] = grid.kn == 0 ? nlohmann::ordered_json("max(1000,n)") : nlohmann::ordered_json(grid.kn);
  return j;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                             std::size_t r) {
  return derive_seed(derive_seed(seed, stream, 0), n, r);
}

Mat4 reference_information(const GhParams& theta0, std::size_t reference_n, std::uint64_t seed,
                           const GridConfig& grid) {
  const Sample big = sample(reference_n, theta0, seed);
  const Mat4 info = observed_information(big, theta0, grid);
  return info / static_cast<double>(reference_n);
}

const RecoveryCell& RecoveryReport::cell(std::size_t n, Method m) const {
  for (const auto& c : cells) {
    if (c.n == n && c.method == m) return c;
  }
  throw DomainError("no recovery cell for that (n, method)");
}

RecoveryReport run_recovery_study(const StudyConfig& cfg, std::size_t reference_n) {
  cfg.validate();
  RecoveryReport report;
  report.reference_n = reference_n;
  report.reference_info =
      reference_information(cfg.theta0, reference_n, derive_seed(cfg.seed, kReferenceStream, 0), cfg.grid);
  Vec4 cov_diag = Vec4::Constant(kNaN);
  Eigen::LLT<Mat4> llt(report.reference_info);
  if (llt.info() == Eigen::Success) cov_diag = llt.solve(Mat4::Identity()).diagonal();

  for (std::size_t n : cfg.sample_sizes) {
    std::vector<std::vector<Vec4>> estimates(cfg.methods.size());
    std::vector<std::size_t> failures(cfg.methods.size(), 0);
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const Sample s = sample(n, cfg.theta0, replicate_seed(cfg.seed, kRecoveryStream, n, r));
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        try {
          const FitResult fit = run_method(cfg.methods[m], s, cfg.grid);
          if (fit.converged) {
            estimates[m].push_back(to_vector(fit.theta_hat));
          } else {
            ++failures[m];
          }
        } catch (const Error&) {
          ++failures[m];
        }
      }
    }
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      RecoveryCell c;
      c.n = n;
      c.method = cfg.methods[m];
      c.converged = estimates[m].size();
      c.failures = failures[m];
      c.theoretical_se = (cov_diag / static_cast<double>(n)).cwiseSqrt();
      c.degenerate = c.converged < 2;
      if (c.converged > 0) {
        Vec4 sum = Vec4::Zero();
        for (const auto& e : estimates[m]) sum += e;
        c.mean = sum / static_cast<double>(c.converged);
      } else {
        c.mean = Vec4::Constant(kNaN);
      }
      if (c.degenerate) {
        c.se = Vec4::Constant(kNaN);
      } else {
        Vec4 ss = Vec4::Zero();
        for (const auto& e : estimates[m]) ss += (e - c.mean).cwiseAbs2();
        c.se = (ss / static_cast<double>(c.converged - 1)).cwiseSqrt();
      }
      report.cells.push_back(c);
    }
  }
  return report;
}

StudyReport RecoveryReport::to_report(const StudyConfig& cfg) const {
  StudyReport out;
  out.study = "recovery";
  out.config = cfg.to_json();
  out.config["reference_n"] = reference_n;
  for (const auto& c : cells) {
    for (int j = 0; j < 4; ++j) {
      nlohmann::ordered_json row;
      row["n"] = c.n;
      row["method"] = std::string(method_name(c.method));
      row["parameter"] = kParamNames[j];
      row["mean"] = c.mean[j];
      row["empirical_se"] = c.se[j];
      row["theoretical_se"] = c.theoretical_se[j];
      row["converged"] = c.converged;
      row["failures"] = c.failures;
      row["degenerate"] = c.degenerate;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

GhParams local_alternative(NullKind null, double d, std::size_t n, const GhParams& base) {
  const double shift = d / std::sqrt(static_cast<double>(n));
  GhParams p = base;
  switch (null) {
    case NullKind::GZero:
      p.g = shift;
      break;
    case NullKind::HZero:
      p.h = shift;
      break;
    case NullKind::GAndHZero:
      p.g = 3.0 * shift;
      p.h = shift;
      break;
  }
  p.validate();
  return p;
}

const PowerCell& PowerReport::cell(double d, std::size_t n, double level) const {
  for (const auto& c : cells) {
    if (c.d == d && c.n == n && c.level == level) return c;
  }
  throw DomainError("no power cell for that (d, n, level)");
}

PowerReport run_power_study(NullKind null, const std::vector<double>& d_values,
                            const StudyConfig& cfg, const std::vector<double>& levels) {
  cfg.validate();
  if (levels.empty()) throw DomainError("at least one test level is required");
  std::vector<double> critical;
  const MixedChiSq ref = reference_distribution(null);
  for (double a : levels) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("test levels must lie in (0,1)");
    critical.push_back(mixed_chisq_quantile(ref, 1.0 - a));
  }

  PowerReport report;
  for (std::size_t di = 0; di < d_values.size(); ++di) {
    const double d = d_values[di];
    for (std::size_t n : cfg.sample_sizes) {
      const GhParams theta = local_alternative(null, d, n, cfg.theta0);
      std::vector<std::size_t> rejections(levels.size(), 0);
      std::size_t ok = 0;
      std::size_t failed = 0;
      const std::uint64_t stream = derive_seed(kPowerStream, static_cast<std::uint64_t>(null), di);
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const Sample s = sample(n, theta, replicate_seed(cfg.seed, stream, n, r));
        try {
          // Level only affects the attached critical value; decisions per
          // level are taken below.
          const AlrtResult res = alrt(s, null, cfg.grid, levels.front());
          if (!res.converged) {
            ++failed;
            continue;
          }
          ++ok;
          for (std::size_t l = 0; l < levels.size(); ++l) {
            if (res.d_n > critical[l]) ++rejections[l];
          }
        } catch (const Error&) {
          ++failed;
        }
      }
      for (std::size_t l = 0; l < levels.size(); ++l) {
        PowerCell c;
        c.null = null;
        c.d = d;
        c.n = n;
        c.theta = theta;
        c.level = levels[l];
        c.rejections = rejections[l];
        c.converged = ok;
        c.failures = failed;
        c.rate = ok > 0 ? static_cast<double>(rejections[l]) / static_cast<double>(ok) : kNaN;
        report.cells.push_back(c);
      }
    }
  }
  return report;
}

StudyReport PowerReport::to_report(const StudyConfig& cfg) const {
  StudyReport out;
  out.study = "power";
  out.config = cfg.to_json();
  for (const auto& c : cells) {
    nlohmann::ordered_json row;
    row["null"] = std::string(null_name(c.null));
    row["d"] = c.d;
    row["n"] = c.n;
    row["xi"] = c.theta.xi;
    row["omega"] = c.theta.omega;
    row["g"] = c.theta.g;
    row["h"] = c.theta.h;
    row["level"] = c.level;
    row["rejections"] = c.rejections;
    row["rate"] = c.rate;
    row["converged"] = c.converged;
    row["failures"] = c.failures;
    out.rows.push_back(std::move(row));
  }
  return out;
}

const TimingCell& TimingReport::cell(std::size_t n) const {
  for (const auto& c : cells) {
    if (c.n == n) return c;
  }
  throw DomainError("no timing cell for that n");
}

TimingReport run_timing_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto has = [&](Method m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };
  if (!has(Method::MALE) || !has(Method::NMLE)) {
    throw DomainError("timing study needs both MALE and NMLE in methods");
  }
  using Clock = std::chrono::steady_clock;
  TimingReport report;
  for (std::size_t n : cfg.sample_sizes) {
    TimingCell c;
    c.n = n;
    double male_total = 0.0;
    double nmle_total = 0.0;
    double ratio_total = 0.0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const Sample s = sample(n, cfg.theta0, replicate_seed(cfg.seed, kTimingStream, n, r));
      try {
        const GhParams start = default_start(s);
        const auto t0 = Clock::now();
        const FitResult male = fit_male(s, cfg.grid, start);
        const auto t1 = Clock::now();
        const FitResult nmle = fit_nmle(s, start);
        const auto t2 = Clock::now();
        if (!male.converged || !nmle.converged) {
          ++c.failures;
          continue;
        }
        const double tm = std::chrono::duration<double>(t1 - t0).count();
        const double tn = std::chrono::duration<double>(t2 - t1).count();
        male_total += tm;
        nmle_total += tn;
        ratio_total += tn / tm;
        ++c.converged;
      } catch (const Error&) {
        ++c.failures;
      }
    }
    if (c.converged > 0) {
      const double k = static_cast<double>(c.converged);
      c.mean_male_seconds = male_total / k;
      c.mean_nmle_seconds = nmle_total / k;
      c.mean_ratio = ratio_total / k;
    } else {
      c.mean_male_seconds = c.mean_nmle_seconds = c.mean_ratio = kNaN;
    }
    report.cells.push_back(c);
  }
  return report;
}

StudyReport TimingReport::to_report(const StudyConfig& cfg) const {
  StudyReport out;
  out.study = "timing";
  out.config = cfg.to_json();
  for (const auto& c : cells) {
    nlohmann::ordered_json row;
    row["n"] = c.n;
    row["mean_male_seconds"] = c.mean_male_seconds;
    row["mean_nmle_seconds"] = c.mean_nmle_seconds;
    row["mean_ratio_nmle_over_male"] = c.mean_ratio;
    row["converged"] = c.converged;
    row["failures"] = c.failures;
    out.rows.push_back(std::move(row));
  }
  return out;
}

const BoundaryCell& BoundaryReport::cell(double g0, std::size_t n) const {
  for (const auto& c : cells) {
    if (c.g0 == g0 && c.n == n) return c;
  }
  throw DomainError("no boundary cell for that (g0, n)");
}

BoundaryReport run_boundary_study(const std::vector<double>& g0_values, const StudyConfig& cfg) {
  cfg.validate();
  if (cfg.theta0.h != 0.0) throw DomainError("boundary study requires theta0.h == 0");
  BoundaryReport report;
  for (std::size_t gi = 0; gi < g0_values.size(); ++gi) {
    GhParams theta = cfg.theta0;
    theta.g = g0_values[gi];
    const std::uint64_t stream = derive_seed(kBoundaryStream, gi, 0);
    for (std::size_t n : cfg.sample_sizes) {
      BoundaryCell c;
      c.g0 = theta.g;
      c.n = n;
      std::size_t zeros = 0;
      std::size_t negative = 0;
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const Sample s = sample(n, theta, replicate_seed(cfg.seed, stream, n, r));
        try {
          const FitResult fit = fit_male(s, cfg.grid);
          if (!fit.converged) {
            ++c.failures;
            continue;
          }
          ++c.converged;
          if (fit.theta_hat.h == 0.0) ++zeros;
          if (s_n_statistic(s, theta) < 0.0) ++negative;
        } catch (const Error&) {
          ++c.failures;
        }
      }
      const double k = static_cast<double>(c.converged);
      c.p0 = c.converged > 0 ? static_cast<double>(zeros) / k : kNaN;
      c.c0 = c.converged > 0 ? static_cast<double>(negative) / k : kNaN;
      report.cells.push_back(c);
    }
  }
  return report;
}

StudyReport BoundaryReport::to_report(const StudyConfig& cfg) const {
  StudyReport out;
  out.study = "boundary";
  out.config = cfg.to_json();
  for (const auto& c : cells) {
    nlohmann::ordered_json row;
    row["g0"] = c.g0;
    row["n"] = c.n;
    row["p0n"] = c.p0;
    row["c0n"] = c.c0;
    row["p0n_minus_c0n"] = c.p0 - c.c0;
    row["converged"] = c.converged;
    row["failures"] = c.failures;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace tgh
