#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tgh/approx_lik.hpp"
#include "tgh/errors.hpp"
#include "tgh/normal.hpp"

using namespace tgh;
using doctest::Approx;

namespace {

const GhParams kRef{3.0, 3.0, 0.5, 0.2};

double exact_sum(const Sample& s, const GhParams& p) {
  double total = 0.0;
  for (double y : s.values()) total += log_density_exact(y, p, 1e-13);
  return total;
}

double max_abs_dvarphi(const GhParams& p, double bn) {
  double m = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double z = -bn + 2.0 * bn * i / 20000.0;
    m = std::max(m, std::abs(dvarphi_dz(z, p)));
  }
  return m;
}

GhParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xi(-5, 5), omega(0.3, 4), g(-0.8, 0.8), h(0.02, 0.5);
  return {xi(rng), omega(rng), g(rng), h(rng)};
}

}  // namespace

TEST_CASE("grid construction") {
  const KnotGrid small = build_grid({0, 1, 0, 0}, 1.0, 3);
  CHECK(small.z == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(small.y == std::vector<double>{-1.0, 0.0, 1.0});

  // The K = 15, bn = 6 layout of the illustrative (0, 1, 0.5, 0.2) example.
  const GhParams p{0, 1, 0.5, 0.2};
  const KnotGrid g15 = build_grid(p, 6.0, 15);
  REQUIRE(g15.size() == 15);
  CHECK(g15.z.front() == -6.0);
  CHECK(g15.z.back() == 6.0);
  CHECK(g15.z[7] == Approx(0.0));
  for (std::size_t k = 0; k < 15; ++k) {
    CHECK(g15.y[k] == Approx(tau(g15.z[k], 0.5, 0.2)).epsilon(1e-15));
    if (k > 0) {
      CHECK(g15.z[k] > g15.z[k - 1]);
      CHECK(g15.y[k] > g15.y[k - 1]);
    }
  }

  // Knot images coincide with model quantiles at Phi(Z_k).
  const KnotGrid g = build_grid(kRef, 4.0, 101);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double q = quantile(normal::cdf(g.z[k]), kRef);
    CHECK(std::abs(g.y[k] - q) <= 1e-10 * std::max(1.0, std::abs(q)));
  }

  CHECK(GridConfig{}.knots_for(10) == 1000);
  CHECK(GridConfig{}.knots_for(2500) == 2500);
  CHECK(GridConfig{10.0, 77}.knots_for(2500) == 77);
  CHECK_THROWS_AS(build_grid(kRef, 10.0, 2), DomainError);
  CHECK_THROWS_AS(build_grid(kRef, -1.0, 10), DomainError);
}

TEST_CASE("bin assignment") {
  const KnotGrid grid = build_grid({0, 1, 0, 0}, 2.0, 5);  // knots -2 -1 0 1 2
  SUBCASE("knot values fall into the cell they open") {
    const auto bins = bin_assign(Sample({-2.0, -1.0, 0.0, 1.0}), grid);
    CHECK(bins == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("right end is closed") {
    const auto bins = bin_assign(Sample({-0.5, 2.0}), grid);
    CHECK(bins.back() == 3);
  }
  SUBCASE("outside the knot range") {
    CHECK_THROWS_AS(bin_assign(Sample({-2.5, 0.0}), grid), SupportViolation);
    CHECK_THROWS_AS(bin_assign(Sample({0.0, 2.0001}), grid), SupportViolation);
  }
  SUBCASE("merge scan agrees with binary search") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const GhParams p = random_params(rng);
      const KnotGrid g = build_grid(p, 4.0, 50 + trial * 37);
      std::uniform_real_distribution<double> u(g.y.front(), g.y.back());
      std::vector<double> ys(300);
      for (auto& y : ys) y = u(rng);
      ys[0] = g.y[3];  // exact tie
      ys[1] = g.y.back();
      const Sample s(ys);
      const auto bins = bin_assign(s, g);
      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(bins[i] == oracle::binary_search_cell(g.y, s[i]));
      }
    }
  }
}

TEST_CASE("interpolated normal score") {
  const KnotGrid id = build_grid({0, 1, 0, 0}, 3.0, 7);
  CHECK(z_tilde(id.y[2], 2, id) == id.z[2]);
  CHECK(z_tilde(0.5 * (id.y[4] + id.y[5]), 4, id) == Approx(0.5 * (id.z[4] + id.z[5])));

  const GridConfig cfg{10.0, 2000};
  const KnotGrid g = build_grid({0, 1, 0.5, 0.2}, cfg.bn, cfg.kn);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> zdist;
  std::vector<double> ys(1000);
  for (auto& y : ys) y = tau(zdist(rng), 0.5, 0.2);
  const Sample s(ys);
  const auto bins = bin_assign(s, g);
  const double bound = 2.0 * cfg.bn / static_cast<double>(cfg.kn);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double zt = z_tilde(s[i], bins[i], g);
    CHECK(zt >= g.z[bins[i]]);
    CHECK(zt <= g.z[bins[i] + 1]);
    const double z = oracle::bisect([&](double x) { return oracle::tau_direct(x, 0.5, 0.2) - s[i]; }, -10, 10);
    CHECK(std::abs(zt - z) <= bound);
  }
}

TEST_CASE("approximated log-likelihood") {
  SUBCASE("support check") {
    const Sample s = sample(200, kRef, 1);
    GhParams shifted = kRef;
    const KnotGrid g = build_grid(kRef, 10.0, 1000);
    shifted.xi += s.min() - g.y.front() + 1.0;  // Y_1 > y_min
    CHECK(std::isinf(approx_loglik(s, shifted)));
    CHECK(approx_loglik(s, shifted) < 0.0);
    CHECK_THROWS_AS(approx_loglik_grad(s, shifted), SupportViolation);
    CHECK(std::isfinite(approx_loglik(s, kRef)));
    // A narrow grid fails to cover the sample.
    CHECK(std::isinf(approx_loglik(s, kRef, {0.5, 100})));
  }
  SUBCASE("normal case") {
    const Sample s({-1.0, 0.0, 1.0});
    const double expected = -1.5 * std::log(2.0 * std::numbers::pi) - 1.0;
    CHECK(approx_loglik(s, {0, 1, 0, 0}, {10.0, 1000000}) == Approx(expected).epsilon(1e-6));
  }
  SUBCASE("error bound against the exact likelihood") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
      const GhParams p = random_params(rng);
      const Sample s = sample(300, p, 500 + trial);
      const GridConfig cfg{10.0, 1000};
      const double approx = approx_loglik(s, p, cfg);
      REQUIRE(std::isfinite(approx));
      const double bound = s.size() * (2.0 * cfg.bn / cfg.kn) * max_abs_dvarphi(p, cfg.bn);
      CHECK(std::abs(approx - exact_sum(s, p)) <= bound);
    }
  }
  SUBCASE("refinement") {
    const Sample s = sample(500, kRef, 8);
    const double exact = exact_sum(s, kRef);
    double prev_bound = INFINITY;
    for (std::size_t kn : {1000, 2000, 4000, 8000}) {
      const double bound = (2.0 * 10.0 / kn) * max_abs_dvarphi(kRef, 10.0);
      CHECK(bound < prev_bound);
      prev_bound = bound;
    }
    const double err = std::abs(approx_loglik(s, kRef, {10.0, 1000000}) - exact) / s.size();
    CHECK(err <= 1e-6);
  }
  SUBCASE("depends only on the multiset") {
    auto xs = draw(100, kRef, 4);
    const double a = approx_loglik(Sample(xs), kRef);
    std::reverse(xs.begin(), xs.end());
    std::shuffle(xs.begin(), xs.end(), std::mt19937_64(1));
    CHECK(approx_loglik(Sample(xs), kRef) == a);
  }
}

TEST_CASE("analytic gradient") {
  SUBCASE("symmetric sample under the normal model") {
    std::vector<double> ys;
    for (double y : {0.3, 0.9, 1.7, 2.2}) {
      ys.push_back(y);
      ys.push_back(-y);
    }
    const Vec4 grad = approx_loglik_grad(Sample(ys), {0, 1, 0, 0});
    CHECK(std::abs(grad[0]) <= 1e-8);
    CHECK(std::abs(grad[2]) <= 1e-8);
  }
  SUBCASE("matches central differences") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const GhParams p = random_params(rng);
      const Sample s = sample(50, p, 900 + trial);
      const GridConfig cfg{10.0, 1000};
      const Vec4 grad = approx_loglik_grad(s, p, cfg);
      const Vec4 theta = to_vector(p);
      for (int j = 0; j < 4; ++j) {
        const double step = 1e-6 * (1.0 + std::abs(theta[j]));
        Vec4 up = theta, down = theta;
        up[j] += step;
        down[j] -= step;
        const double fd =
            (approx_loglik(s, to_params(up), cfg) - approx_loglik(s, to_params(down), cfg)) / (2 * step);
        CHECK(std::abs(grad[j] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
    }
    CHECK(checked == 160);
  }
  SUBCASE("value and gradient agree between entry points") {
    const Sample s = sample(80, kRef, 2);
    const LoglikValue both = approx_loglik_with_grad(s, kRef);
    CHECK(both.value == approx_loglik(s, kRef));
    CHECK(both.grad == approx_loglik_grad(s, kRef));
  }
}

TEST_CASE("observed information") {
  SUBCASE("normal model location entry") {
    const double omega = 2.0;
    const Sample s = sample(20000, {1.0, omega, 0, 0}, 77);
    const Mat4 info = observed_information(s, {1.0, omega, 0, 0});
    CHECK(info(0, 0) == Approx(s.size() / (omega * omega)).epsilon(0.10));
    CHECK(info == info.transpose());
  }
  SUBCASE("positive definite at the reference model") {
    const Sample s = sample(2000, kRef, 5);
    const Mat4 info = observed_information(s, kRef);
    CHECK(info == info.transpose());
    Eigen::SelfAdjointEigenSolver<Mat4> eig(info / static_cast<double>(s.size()));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("one-sided in h at the boundary") {
    const Sample s = sample(500, {0, 1, 0.2, 0.0}, 6);
    const Mat4 info = observed_information(s, {0, 1, 0.2, 0.0});
    CHECK(info.allFinite());
  }
}
