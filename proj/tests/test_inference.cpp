#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/LU>

#include "tgh/errors.hpp"
#include "tgh/inference.hpp"

using namespace tgh;
using doctest::Approx;

namespace {

const MixedChiSq kChi1{1.0, 1, 1};
const MixedChiSq kBar01{0.5, 0, 1};
const MixedChiSq kBar12{0.5, 1, 2};

Mat4 test_info() {
  Mat4 m;
  m << 2.0, 0.3, 0.1, 0.2,
       0.3, 1.5, 0.2, -0.4,
       0.1, 0.2, 1.0, 0.3,
       0.2, -0.4, 0.3, 0.8;
  return m;
}

Mat4 sample_cov(const DrawMatrix& d) {
  const Eigen::RowVector4d mean = d.colwise().mean();
  const DrawMatrix c = d.rowwise() - mean;
  return (c.transpose() * c) / static_cast<double>(d.rows() - 1);
}

}  // namespace

TEST_CASE("chi-square mixtures") {
  SUBCASE("critical values") {
    // Reference values from an arbitrary-precision evaluation.
    CHECK(mixed_chisq_quantile(kBar01, 0.95) == Approx(2.7055435).epsilon(1e-7));
    CHECK(mixed_chisq_quantile(kBar12, 0.95) == Approx(5.1383808).epsilon(1e-7));
    CHECK(mixed_chisq_quantile(kChi1, 0.95) == Approx(3.8414588).epsilon(1e-7));
    CHECK(mixed_chisq_quantile(kBar01, 0.95) == Approx(2.71).epsilon(0.005 / 2.71));
    CHECK(mixed_chisq_quantile(kBar12, 0.95) == Approx(5.14).epsilon(0.005 / 5.14));
    CHECK(mixed_chisq_quantile(kChi1, 0.95) == Approx(3.84).epsilon(0.005 / 3.84));
  }
  SUBCASE("survival function") {
    CHECK(mixed_chisq_sf(kBar01, 0.0) == 0.5);
    CHECK(mixed_chisq_sf(kBar01, -1.0) == 1.0);
    CHECK(mixed_chisq_sf(kChi1, -1.0) == 1.0);
    CHECK(mixed_chisq_sf(kBar01, 2.71) == Approx(0.05).epsilon(2e-3 / 0.05));
    CHECK(chisq_sf(2, 3.0) == Approx(std::exp(-1.5)).epsilon(1e-13));
    CHECK(chisq_cdf(0, 0.0) == 1.0);
    CHECK(chisq_cdf(0, -1e-300) == 0.0);
  }
  SUBCASE("quantile and sf agree") {
    for (const auto& d : {kChi1, kBar01, kBar12}) {
      const double lo = d.cdf(0.0);
      for (double p : {0.51, 0.6, 0.75, 0.9, 0.95, 0.99, 0.999}) {
        if (p <= lo) continue;
        CHECK(std::abs(mixed_chisq_sf(d, mixed_chisq_quantile(d, p)) - (1.0 - p)) <= 1e-9);
      }
    }
    CHECK(mixed_chisq_quantile(kBar01, 0.3) == 0.0);
    CHECK(mixed_chisq_quantile(kBar01, 0.5) == 0.0);
  }
  SUBCASE("cdf is monotone and right-continuous") {
    double prev = 0.0;
    for (double x = -1.0; x <= 20.0; x += 0.05) {
      const double c = kBar12.cdf(x);
      CHECK(c >= prev);
      prev = c;
    }
    CHECK(kBar01.cdf(0.0) == 0.5);
    CHECK(kBar01.cdf(-1e-12) == 0.0);
  }
  SUBCASE("reference laws") {
    const MixedChiSq g = reference_distribution(NullKind::GZero);
    CHECK(g.sf(3.0) == Approx(chisq_sf(1, 3.0)));
    const MixedChiSq h = reference_distribution(NullKind::HZero);
    CHECK(h.sf(0.0) == 0.5);
    const MixedChiSq gh = reference_distribution(NullKind::GAndHZero);
    CHECK(gh.sf(2.0) == Approx(0.5 * chisq_sf(1, 2.0) + 0.5 * chisq_sf(2, 2.0)));
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(mixed_chisq_quantile(kChi1, 0.0), DomainError);
    CHECK_THROWS_AS(mixed_chisq_quantile(kChi1, 1.0), DomainError);
    CHECK_THROWS_AS(MixedChiSq({1.5, 1, 1}).validate(), DomainError);
    CHECK_THROWS_AS(MixedChiSq({0.5, -1, 1}).validate(), DomainError);
  }
}

TEST_CASE("null names") {
  CHECK(parse_null("g") == NullKind::GZero);
  CHECK(parse_null("h") == NullKind::HZero);
  CHECK(parse_null("gh") == NullKind::GAndHZero);
  CHECK(parse_null("g_and_h_zero") == NullKind::GAndHZero);
  CHECK(null_name(NullKind::HZero) == "h_zero");
  CHECK_THROWS_AS(parse_null("xi"), DomainError);
}

TEST_CASE("restricted fits") {
  const GhParams theta{3.0, 3.0, 0.5, 0.2};
  const Sample s = sample(500, theta, 17);

  SUBCASE("normal null reduces to the sample mean") {
    const Sample z = sample(400, {1.0, 2.0, 0.0, 0.0}, 18);
    const double mean = std::accumulate(z.values().begin(), z.values().end(), 0.0) / z.size();
    const FitResult fit = fit_restricted(z, NullKind::GAndHZero);
    CHECK(fit.converged);
    CHECK(fit.theta_hat.g == 0.0);
    CHECK(fit.theta_hat.h == 0.0);
    // Piecewise-linear interpolation perturbs the normal MLE by O(spacing^2).
    CHECK(fit.theta_hat.xi == Approx(mean).epsilon(1e-3));
  }
  SUBCASE("nested objectives") {
    const FitResult full = fit_male(s);
    for (NullKind k : {NullKind::GZero, NullKind::HZero, NullKind::GAndHZero}) {
      const FitResult r = fit_restricted(s, k, full.grid);
      CHECK(r.objective <= full.objective + 1e-8);
      if (k != NullKind::HZero) CHECK(r.theta_hat.g == 0.0);
      if (k != NullKind::GZero) CHECK(r.theta_hat.h == 0.0);
    }
  }
  SUBCASE("g null on symmetric data") {
    std::vector<double> ys;
    const Sample base = sample(300, {0.0, 1.0, 0.0, 0.2}, 19);
    for (double y : base.values()) {
      ys.push_back(y);
      ys.push_back(-y);
    }
    const AlrtResult res = alrt(Sample(ys), NullKind::GZero);
    CHECK(res.d_n <= 1e-6);
  }
}

TEST_CASE("approximate likelihood ratio test") {
  SUBCASE("strong skewness rejects g = 0") {
    const AlrtResult res = alrt(sample(500, {3.0, 3.0, 0.5, 0.2}, 21), NullKind::GZero);
    CHECK(res.converged);
    CHECK(res.reject);
    CHECK(res.d_n > res.critical_value);
    CHECK(res.critical_value == Approx(3.8414588).epsilon(1e-7));
    CHECK(res.p_value < 0.05);
    CHECK(res.d_n == Approx(-2.0 * (res.restricted_fit.objective - res.full_fit.objective)));
  }
  SUBCASE("statistic is nonnegative and p-values are valid") {
    for (int r = 0; r < 6; ++r) {
      const Sample s = sample(200, {3.0, 3.0, 0.0, 0.0}, 300 + r);
      for (NullKind k : {NullKind::GZero, NullKind::HZero, NullKind::GAndHZero}) {
        const AlrtResult res = alrt(s, k);
        CHECK(res.d_n >= 0.0);
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
        CHECK_FALSE(res.clamp_flagged);
        CHECK(res.reject == (res.d_n > res.critical_value));
      }
    }
  }
  SUBCASE("h on the boundary gives D = 0 and p >= 0.5") {
    bool seen = false;
    for (int r = 0; r < 10 && !seen; ++r) {
      const AlrtResult res = alrt(sample(400, {3.0, 3.0, 0.3, 0.0}, 500 + r), NullKind::HZero);
      if (res.full_fit.theta_hat.h == 0.0) {
        seen = true;
        CHECK(res.d_n == Approx(0.0).epsilon(1e-9).scale(1.0));
        CHECK(res.p_value >= 0.5);
        CHECK_FALSE(res.reject);
      }
    }
    CHECK(seen);
  }
  SUBCASE("level is validated") {
    const Sample s = sample(100, {0, 1, 0, 0}, 1);
    CHECK_THROWS_AS(alrt(s, NullKind::GZero, {}, 0.0), DomainError);
    CHECK_THROWS_AS(alrt(s, NullKind::GZero, {}, 1.0), DomainError);
  }
}

TEST_CASE("limiting distribution draws") {
  const Mat4 info = test_info();
  const Mat4 cov = info.inverse();

  SUBCASE("interior law") {
    const DrawMatrix d = asymptotic_distribution(info, false, 100000, 5);
    const Mat4 c = sample_cov(d);
    for (int i = 0; i < 4; ++i) {
      CHECK(c(i, i) == Approx(cov(i, i)).epsilon(0.05));
    }
    CHECK((c - cov).cwiseAbs().maxCoeff() <= 0.05 * cov.diagonal().maxCoeff());
  }
  SUBCASE("diagonal information") {
    const Mat4 diag = Eigen::Vector4d(4.0, 1.0, 0.25, 2.0).asDiagonal();
    const Mat4 c = sample_cov(asymptotic_distribution(diag, false, 100000, 6));
    const Eigen::Vector4d expect(0.25, 1.0, 4.0, 0.5);
    for (int i = 0; i < 4; ++i) CHECK(c(i, i) == Approx(expect[i]).epsilon(0.05));
  }
  SUBCASE("boundary law") {
    const std::size_t n_draws = 100000;
    const DrawMatrix d = asymptotic_distribution(info, true, n_draws, 7);
    std::vector<Eigen::Index> zero_rows;
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      CHECK(d(r, 3) >= 0.0);
      if (d(r, 3) == 0.0) zero_rows.push_back(r);
    }
    const double frac = static_cast<double>(zero_rows.size()) / n_draws;
    CHECK(std::abs(frac - 0.5) <= 3.0 / std::sqrt(static_cast<double>(n_draws)));

    // Projected coordinates follow the conditional Gaussian law.
    DrawMatrix proj(static_cast<Eigen::Index>(zero_rows.size()), 4);
    for (std::size_t i = 0; i < zero_rows.size(); ++i) proj.row(i) = d.row(zero_rows[i]);
    const Mat4 c = sample_cov(proj);
    const Eigen::Matrix3d expect =
        cov.topLeftCorner<3, 3>() - cov.block<3, 1>(0, 3) * cov.block<1, 3>(3, 0) / cov(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(c(i, j) - expect(i, j)) <= 0.05 * std::sqrt(expect(i, i) * expect(j, j)));
      }
    }
  }
  SUBCASE("same seed, same draws") {
    CHECK(asymptotic_distribution(info, true, 50, 9) == asymptotic_distribution(info, true, 50, 9));
  }
  SUBCASE("estimator scale") {
    const GhParams centre{1.0, 2.0, 0.1, 0.0};
    const DrawMatrix d = asymptotic_estimator_draws(centre, info, 400, true, 1000, 10);
    const DrawMatrix raw = asymptotic_distribution(info, true, 1000, 10);
    CHECK((d.row(3).transpose() - (to_vector(centre) + raw.row(3).transpose() / 20.0)).norm() <= 1e-14);
    for (Eigen::Index r = 0; r < d.rows(); ++r) CHECK(d(r, 3) >= 0.0);
  }
  SUBCASE("singular information") {
    Mat4 bad = info;
    bad.row(3) = bad.row(2);
    bad.col(3) = bad.col(2);
    CHECK_THROWS_AS(asymptotic_distribution(bad, false, 10, 1), SingularInformation);
    CHECK_THROWS_AS(asymptotic_distribution(-info, true, 10, 1), SingularInformation);
  }
}

TEST_CASE("boundary score statistic") {
  SUBCASE("closed form") {
    const double r3 = std::sqrt(3.0);
    const std::vector<double> zero{r3, -r3, r3};
    CHECK(std::abs(s_n_normal_closed_form(zero)) <= 1e-12);
    const std::vector<double> pm{1.0, -1.0};
    CHECK(s_n_normal_closed_form(pm) == Approx(-std::sqrt(2.0)).epsilon(1e-14));
  }
  SUBCASE("general path matches the closed form") {
    const GhParams p0{2.0, 1.5, 0.0, 0.0};
    const Sample s = sample(200, p0, 33);
    std::vector<double> z;
    for (double y : s.values()) z.push_back((y - p0.xi) / p0.omega);
    const double closed = s_n_normal_closed_form(z);
    CHECK(s_n_statistic(s, p0) == Approx(closed).epsilon(1e-10));
    CHECK(s_n_statistic(s, {2.0, 1.5, 1e-9, 1e-9}) == Approx(closed).epsilon(1e-4));
  }
  SUBCASE("finite-difference oracle on the exact likelihood") {
    const Sample s = sample(150, {1.0, 2.0, 0.4, 0.2}, 34);
    const double root_n = std::sqrt(150.0);
    for (const GhParams& p : {GhParams{1.0, 2.0, 0.4, 0.2}, GhParams{1.0, 2.0, -0.3, 0.1}}) {
      const double e = 1e-5;
      auto at = [&](double dh) { GhParams q = p; q.h += dh; return exact_loglik(s, q, 1e-13); };
      const double fd = (at(e) - at(-e)) / (2.0 * e) / root_n;
      CHECK(s_n_statistic(s, p) == Approx(fd).epsilon(1e-5));
    }
    // At h = 0 only one side exists.
    const GhParams p{1.0, 2.0, 0.4, 0.0};
    const Sample t = sample(150, p, 35);
    const double e = 1e-5;
    auto at = [&](double h) { GhParams q = p; q.h = h; return exact_loglik(t, q, 1e-13); };
    const double fd = (-3.0 * at(0.0) + 4.0 * at(e) - at(2.0 * e)) / (2.0 * e) / root_n;
    CHECK(s_n_statistic(t, p) == Approx(fd).epsilon(1e-5));
  }
  SUBCASE("sign under the normal model is roughly balanced") {
    int negative = 0;
    for (int r = 0; r < 200; ++r) {
      if (s_n_statistic(sample(200, {0, 1, 0, 0}, 900 + r), {0, 1, 0, 0}) < 0.0) ++negative;
    }
    CHECK(negative > 60);
    CHECK(negative < 160);
  }
}
