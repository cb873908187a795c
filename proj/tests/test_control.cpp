#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace pglqr;
using testutil::scalar;

TEST(Plant, CollectsEveryViolation) {
  try {
    PlantModel p(Matrix::Identity(2, 3), Matrix::Identity(2, 1), -Matrix::Identity(2, 2), scalar(0.0),
                 Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("A must be square"), std::string::npos) << msg;
    EXPECT_NE(msg.find("R"), std::string::npos) << msg;
  }
}

TEST(Plant, DeadbeatGainIsStabilizing) {
  const PlantModel p = testutil::s1_plant();
  const ClosedLoop cl = closed_loop(p, Gain(scalar(-0.5)));
  EXPECT_EQ(cl.a_k(0, 0), 0.0);
  EXPECT_EQ(cl.stability.spectral_radius, 0.0);
  EXPECT_TRUE(cl.stability.is_stabilizing);
  EXPECT_FALSE(is_stabilizing(p, Gain(scalar(0.6))));
}

TEST(Plant, GainShapeChecked) {
  EXPECT_THROW(check_gain_shape(testutil::bench_plant(), Gain(Matrix::Zero(3, 2))), ConfigError);
}

TEST(Lyapunov, ScalarGeometricSeries) {
  EXPECT_NEAR(solve_discrete_lyapunov(scalar(0.5), scalar(1.0))(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(Lyapunov, DirectAndDoublingAgreeWithSeries) {
  std::mt19937_64 g(11);
  for (int n : {3, 40}) {
    Matrix m = testutil::random_matrix(g, n, n);
    m *= 0.9 / spectral_radius(m);
    const Matrix w = testutil::random_spd(g, n);
    const Matrix x = solve_discrete_lyapunov(m, w);
    const Matrix ref = testutil::series_lyapunov(m.transpose(), w);
    EXPECT_LT((x - ref).norm() / ref.norm(), 1e-9) << "n = " << n;
    EXPECT_LT(detail::lyapunov_residual(m, w, x).norm() / x.norm(), 1e-10);
  }
}

TEST(Lyapunov, UnstableReportsRadius) {
  try {
    solve_discrete_lyapunov(scalar(1.2), scalar(1.0));
    FAIL();
  } catch (const InstabilityError& e) {
    EXPECT_NEAR(e.spectral_radius(), 1.2, 1e-12);
  }
}

TEST(Exact, ScalarDeadbeat) {
  const ClosedLoopQuantities q = exact_quantities(testutil::s1_plant(), Gain(scalar(-0.5)));
  EXPECT_NEAR(q.P(0, 0), 1.25, 1e-14);
  EXPECT_NEAR(q.Sigma(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(q.cost, 1.25, 1e-14);
  EXPECT_NEAR(q.E(0, 0), -0.5, 1e-14);
  EXPECT_NEAR(q.grad(0, 0), -1.0, 1e-14);
}

TEST(Exact, ScalarZeroGain) {
  const ClosedLoopQuantities q = exact_quantities(testutil::s1_plant(), Gain(scalar(0.0)));
  EXPECT_NEAR(q.P(0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.Sigma(0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.cost, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.E(0, 0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.grad(0, 0), 16.0 / 9.0, 1e-14);
}

TEST(Exact, UnstableGainThrowsAndCostIsInfinite) {
  EXPECT_THROW(exact_quantities(testutil::s1_plant(), Gain(scalar(1.0))), InstabilityError);
  EXPECT_TRUE(std::isinf(cost_or_infinity(testutil::s1_plant(), Gain(scalar(1.0)))));
}

TEST(Exact, RandomPlantsAgreeWithSeriesAndFiniteDifferences) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testutil::random_case(g);
    const ClosedLoopQuantities q = exact_quantities(c.plant, c.k);
    const Matrix ak = c.plant.a() + c.plant.b() * c.k.matrix();
    const Matrix qk = c.plant.q() + c.k.matrix().transpose() * c.plant.r() * c.k.matrix();
    const Matrix p_ref = testutil::series_lyapunov(ak, qk);
    const Matrix s_ref = testutil::series_lyapunov(ak.transpose(), c.plant.sigma_w());
    EXPECT_LT((q.P - p_ref).norm() / p_ref.norm(), 1e-8);
    EXPECT_LT((q.Sigma - s_ref).norm() / s_ref.norm(), 1e-8);
    EXPECT_NEAR((q.P * c.plant.sigma_w()).trace(), (qk * q.Sigma).trace(), 1e-8 * q.cost);
    const double h = 1e-6;
    for (Index i = 0; i < c.k.inputs(); ++i)
      for (Index j = 0; j < c.k.states(); ++j) {
        Matrix d = Matrix::Zero(c.k.inputs(), c.k.states());
        d(i, j) = h;
        const double fd = (exact_quantities(c.plant, c.k + d).cost - exact_quantities(c.plant, c.k - d).cost) / (2 * h);
        EXPECT_NEAR(fd, q.grad(i, j), 1e-5 * std::max(1.0, q.grad.norm()));
      }
  }
}

TEST(Exact, FiniteHorizonRecursion) {
  const PlantModel p = testutil::s1_plant();
  const auto one = finite_horizon_quantities(p, Gain(scalar(-0.3)), 1);
  EXPECT_NEAR(one.Sigma_l(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(one.C_l, (1.0 + 0.09) * 1.0, 1e-15);
  const auto two = finite_horizon_quantities(p, Gain(scalar(-0.5)), 2);
  EXPECT_NEAR(two.Sigma_l(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(two.C_l, 1.25, 1e-15);
  EXPECT_THROW(finite_horizon_quantities(p, Gain(scalar(-0.5)), 0), DomainError);
}

TEST(Riccati, ScalarClosedForm) {
  const OptimalSolution o = solve_dare(testutil::s1_plant());
  // p^2 - 0.25 p - 1 = 0
  const double p = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  EXPECT_NEAR(o.P_star(0, 0), p, 1e-10);
  EXPECT_NEAR(o.K_star.matrix()(0, 0), -0.5 * p / (1.0 + p), 1e-10);
  EXPECT_NEAR(o.C_star, p, 1e-10);
  EXPECT_NEAR(o.P_star(0, 0), 1.1327822, 1e-7);
  EXPECT_NEAR(o.K_star.matrix()(0, 0), -0.2655644, 1e-7);
}

TEST(Riccati, OptimalGainIsFixedPointAndZeroGradient) {
  const PlantModel p = testutil::bench_plant();
  const OptimalSolution o = solve_dare(p);
  EXPECT_LT((riccati_gain(p, o.P_star) - o.K_star.matrix()).norm(), 1e-10);
  EXPECT_LT(exact_quantities(p, o.K_star).grad.norm(), 1e-9);
}

TEST(Riccati, GradientDomination) {
  const PlantModel p = testutil::s1_plant();
  const double mu = gradient_domination_mu(p);
  const double ks = -0.5 * 1.1327822 / 2.1327822;
  EXPECT_NEAR(mu, 0.25 / (1.0 - std::pow(0.5 + ks, 2)), 1e-6);
  EXPECT_NEAR(mu, 0.26454, 1e-5);
  const ClosedLoopQuantities q0 = exact_quantities(p, Gain(scalar(0.0)));
  const double gap = q0.cost - solve_dare(p).C_star;
  EXPECT_NEAR(gap, 0.20055, 1e-5);
  EXPECT_LE(gap, mu * q0.grad.squaredNorm());
  EXPECT_NEAR(mu * q0.grad.squaredNorm(), 0.83607, 1e-4);
}
