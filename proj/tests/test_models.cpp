#include <cmath>

#include "doctest.h"
#include "ivx/errors.hpp"
#include "ivx/models.hpp"

namespace {

using ivx::Mat;
using ivx::MIdx;
using ivx::ModelSpec;
using ivx::Vec;

MIdx midx1(int i, int n) {
  MIdx m = MIdx::zero();
  m.bump(i, n);
  return m;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("log transform of lognormal and square-root variance coefficients") {
    // original coordinates: cov = [[y s^2, rho delta y s], [., delta^2 y]],
    // drift = (0, kappa (theta - y))
    const double kappa = 2.0, theta = 0.09, delta = 0.4, rho = -0.3;
    auto orig = [&](double, const Vec& state, Mat& cov, Vec& drift) {
      double s = state[0], y = state[1];
      cov = Mat{2, {}};
      drift = Vec{2, {}};
      cov.at(0, 0) = y * s * s;
      cov.at(0, 1) = cov.at(1, 0) = rho * delta * y * s;
      cov.at(1, 1) = delta * delta * y;
      drift[1] = kappa * (theta - y);
    };
    auto logc = ivx::log_transform(orig);
    Vec z{2, {}};
    z[0] = 0.25;  // log price
    z[1] = 0.07;
    Mat aij;
    Vec ai;
    logc(0.0, z, aij, ai);
    CHECK(aij.at(0, 0) == doctest::Approx(0.07).epsilon(1e-14));
    CHECK(aij.at(0, 1) == doctest::Approx(rho * delta * 0.07).epsilon(1e-14));
    CHECK(aij.at(1, 0) == doctest::Approx(rho * delta * 0.07).epsilon(1e-14));
    CHECK(aij.at(1, 1) == doctest::Approx(delta * delta * 0.07).epsilon(1e-14));
    CHECK(ai[0] == doctest::Approx(-0.5 * 0.07).epsilon(1e-14));
    CHECK(ai[1] == doctest::Approx(kappa * (theta - 0.07)).epsilon(1e-14));
  }

  TEST_CASE("constant elasticity tensor has geometric derivative ladder") {
    const double sigma = 0.7, beta = 0.4, s0 = 1.3;
    ModelSpec m = ivx::builtin_cev(sigma, beta, s0);
    const double x0 = std::log(s0);
    const double a0 = sigma * sigma * std::exp(2.0 * (beta - 1.0) * x0);
    const double slope = 2.0 * (beta - 1.0);
    ivx::TaylorTensor tt = ivx::taylor_tensor(m, 0.0, m.z0, 4);
    for (int n = 0; n <= 4; ++n) {
      double expect = std::pow(slope, n) * a0;
      CHECK(tt.data.aij(midx1(0, n)).at(0, 0) == doctest::Approx(expect).epsilon(1e-13));
      CHECK(tt.data.ai(midx1(0, n))[0] == doctest::Approx(-0.5 * expect).epsilon(1e-13));
    }
  }

  TEST_CASE("square-root variance tensor is affine in the variance direction") {
    const double kappa = 2.0, theta = 0.09, delta = 0.4, rho = -0.3, y0 = 0.05;
    ModelSpec m = ivx::builtin_heston(kappa, theta, delta, rho, 1.0, y0);
    ivx::TaylorTensor tt = ivx::taylor_tensor(m, 0.0, m.z0, 3);

    const Mat& a = tt.data.aij(MIdx::zero());
    CHECK(a.at(0, 0) == doctest::Approx(y0).epsilon(1e-14));
    CHECK(a.at(0, 1) == doctest::Approx(rho * delta * y0).epsilon(1e-14));
    CHECK(a.at(1, 1) == doctest::Approx(delta * delta * y0).epsilon(1e-14));
    const Vec& b = tt.data.ai(MIdx::zero());
    CHECK(b[0] == doctest::Approx(-0.5 * y0).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(kappa * (theta - y0)).epsilon(1e-14));

    const Mat& ay = tt.data.aij(midx1(1, 1));
    CHECK(ay.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ay.at(0, 1) == doctest::Approx(rho * delta).epsilon(1e-14));
    CHECK(ay.at(1, 1) == doctest::Approx(delta * delta).epsilon(1e-14));
    const Vec& by = tt.data.ai(midx1(1, 1));
    CHECK(by[0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(by[1] == doctest::Approx(-kappa).epsilon(1e-14));

    // nothing depends on the log price, and nothing is quadratic in variance
    CHECK(tt.data.aij(midx1(0, 1)).at(0, 0) == doctest::Approx(0.0));
    CHECK(tt.data.aij(midx1(0, 1)).at(1, 1) == doctest::Approx(0.0));
    CHECK(tt.data.aij(midx1(1, 2)).at(0, 0) == doctest::Approx(0.0));
    CHECK(tt.data.ai(midx1(1, 2))[1] == doctest::Approx(0.0));
    MIdx mixed = MIdx::zero();
    mixed.bump(0, 1);
    mixed.bump(1, 1);
    CHECK(tt.data.aij(mixed).at(0, 1) == doctest::Approx(0.0));
  }

  TEST_CASE("lognormal limit has a flat tensor") {
    ModelSpec m = ivx::builtin_cev(0.3, 1.0, 2.0);
    ivx::TaylorTensor tt = ivx::taylor_tensor(m, 0.0, m.z0, 3);
    CHECK(tt.data.aij(MIdx::zero()).at(0, 0) == doctest::Approx(0.09).epsilon(1e-14));
    for (int n = 1; n <= 3; ++n) {
      CHECK(tt.data.aij(midx1(0, n)).at(0, 0) == doctest::Approx(0.0));
      CHECK(tt.data.ai(midx1(0, n))[0] == doctest::Approx(0.0));
    }
  }

  TEST_CASE("finite difference fallback matches the closed forms") {
    ModelSpec exact = ivx::builtin_cev(0.6, 0.35, 1.1);
    ModelSpec fd = exact;
    fd.log_derivs = nullptr;  // force the numerical path
    ivx::TaylorTensor te = ivx::taylor_tensor(exact, 0.0, exact.z0, 3);
    ivx::TaylorTensor tf = ivx::taylor_tensor(fd, 0.0, fd.z0, 3);
    for (int n = 0; n <= 3; ++n) {
      double want = te.data.aij(midx1(0, n)).at(0, 0);
      double got = tf.data.aij(midx1(0, n)).at(0, 0);
      CHECK(got == doctest::Approx(want).epsilon(1e-6).scale(std::max(1.0, std::abs(want))));
      CHECK(tf.data.ai(midx1(0, n))[0] ==
            doctest::Approx(te.data.ai(midx1(0, n))[0])
                .epsilon(1e-6)
                .scale(std::max(1.0, std::abs(want))));
    }

    ModelSpec heston = ivx::builtin_heston(1.5, 0.06, 0.5, 0.2, 1.0, 0.06);
    ModelSpec heston_fd = heston;
    heston_fd.log_derivs = nullptr;
    ivx::TaylorTensor he = ivx::taylor_tensor(heston, 0.0, heston.z0, 2);
    ivx::TaylorTensor hf = ivx::taylor_tensor(heston_fd, 0.0, heston_fd.z0, 2);
    for (const auto& [beta, mat] : he.data.daij) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          CHECK(hf.data.aij(beta).at(i, j) ==
                doctest::Approx(mat.at(i, j)).epsilon(1e-6).scale(1.0));
    }
  }

  TEST_CASE("displaced lognormal local volatility closed forms") {
    ivx::LocalVolFn eta;
    eta.value = [](double s) { return 0.2 * (s + 0.1) / s; };
    eta.d1 = [](double s) { return -0.2 * 0.1 / (s * s); };
    eta.d2 = [](double s) { return 2.0 * 0.2 * 0.1 / (s * s * s); };
    ModelSpec m = ivx::builtin_lv(eta, 1.0, "dlv");
    ivx::validate_model(m);
    ivx::TaylorTensor tt = ivx::taylor_tensor(m, 0.0, m.z0, 3);
    // a11(x) = eta(e^x)^2 and d_x a11 = 2 eta eta' s at s = 1
    CHECK(tt.data.aij(MIdx::zero()).at(0, 0) == doctest::Approx(0.22 * 0.22).epsilon(1e-13));
    CHECK(tt.data.aij(midx1(0, 1)).at(0, 0) ==
          doctest::Approx(2.0 * 0.22 * (-0.02)).epsilon(1e-12));
    // order 3 exceeds the closed-form ladder and falls back to differences
    CHECK(std::isfinite(tt.data.aij(midx1(0, 3)).at(0, 0)));
    CHECK(tt.data.ai(midx1(0, 1))[0] ==
          doctest::Approx(-0.5 * 2.0 * 0.22 * (-0.02)).epsilon(1e-12));
  }

  TEST_CASE("builtin witnesses satisfy the sampled ellipticity check") {
    ivx::validate_model(ivx::builtin_cev(1.0, 0.5, 1.0));
    ivx::validate_model(ivx::builtin_cev(0.4, 0.9, 2.0));
    ivx::validate_model(ivx::builtin_heston(1.0, 0.04, 1.0, -0.5));
    ivx::validate_model(ivx::builtin_heston(3.0, 0.09, 0.2, 0.7, 1.5, 0.02));
  }

  TEST_CASE("tampered witnesses are caught by sampling") {
    ModelSpec low_m = ivx::builtin_cev(1.0, 0.5, 1.0);
    low_m.ellipt_M *= 0.5;  // upper bound now violated somewhere on the cylinder
    CHECK_THROWS_AS(ivx::validate_model(low_m), ivx::ValidationError);

    ModelSpec high_eps = ivx::builtin_heston(1.0, 0.04, 1.0, -0.5);
    high_eps.ellipt_eps = std::min(1.0, high_eps.ellipt_eps * 50.0);
    CHECK_THROWS_AS(ivx::validate_model(high_eps), ivx::ValidationError);
  }

  TEST_CASE("asymmetric diffusion matrices are rejected") {
    ModelSpec m;
    m.name = "broken";
    m.d = 2;
    m.log_coeffs = [](double, const Vec&, Mat& aij, Vec& ai) {
      aij = Mat{2, {}};
      ai = Vec{2, {}};
      aij.at(0, 0) = 1.0;
      aij.at(1, 1) = 1.0;
      aij.at(0, 1) = 0.3;
      aij.at(1, 0) = 0.2;
    };
    m.z0 = Vec{2, {}};
    m.state0 = Vec{2, {}};
    m.state0[0] = 1.0;
    m.cyl_radius = 0.5;
    m.ellipt_eps = 0.5;
    m.ellipt_M = 2.0;
    CHECK_THROWS_AS(ivx::validate_model(m), ivx::ValidationError);
  }

  TEST_CASE("expansion points outside the declared cylinder fail fast") {
    ModelSpec m = ivx::builtin_cev(1.0, 0.5, 1.0);
    Vec far = m.z0;
    far[0] += m.cyl_radius + 0.1;
    CHECK_THROWS_AS((void)ivx::taylor_tensor(m, 0.0, far, 2), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::taylor_tensor(m, m.validity_T + 1.0, m.z0, 2),
                    ivx::ValidationError);
  }

  TEST_CASE("kinked coefficients trip the derivative consistency guard") {
    auto orig = [](double, const Vec& state, Mat& cov, Vec& drift) {
      double s = state[0], y = state[1];
      cov = Mat{2, {}};
      drift = Vec{2, {}};
      double lvol = 0.04 + 0.5 * std::abs(std::log(s));
      cov.at(0, 0) = lvol * s * s;
      cov.at(1, 1) = 0.01 * std::max(y, 0.0);
      drift[1] = 0.1;
    };
    Vec state0{2, {}};
    state0[0] = 1.0;
    state0[1] = 1.0;
    // The eigenvalue window [eps*M, M] must bracket the true range (variance
    // row near 0.008, spot row up to ~0.17) so that construction succeeds and
    // the kink is what trips the guard.
    ModelSpec m = ivx::builtin_lsv(orig, state0, 0.005, 1.0, 0.25, "kinked");
    CHECK_THROWS_AS((void)ivx::taylor_tensor(m, 0.0, m.z0, 2), ivx::DerivativeUnavailable);
  }

  TEST_CASE("parameter validation on the builtin factories") {
    CHECK_THROWS_AS((void)ivx::builtin_cev(0.0, 0.5, 1.0), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::builtin_cev(1.0, 1.5, 1.0), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::builtin_cev(1.0, 0.5, -1.0), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::builtin_heston(0.0, 0.04, 1.0, 0.0), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::builtin_heston(1.0, 0.04, 1.0, -1.0), ivx::ValidationError);
    CHECK_THROWS_AS((void)ivx::builtin_heston(1.0, 0.04, 1.0, 0.0, 1.0, -0.1),
                    ivx::ValidationError);
  }
}
