#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace pglqr;
using testutil::scalar;

TEST(Seeding, SameLabelSameStream) {
  const SeedSpec s{42};
  const StreamLabel a{1, 2, 3, 0, StreamPurpose::noise};
  Rng r1 = s.stream(a), r2 = s.stream(a);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r1.gaussian(), r2.gaussian());
}

TEST(Seeding, EveryLabelFieldChangesTheSeed) {
  const SeedSpec s{42};
  const StreamLabel base{1, 2, 3, 4, StreamPurpose::noise};
  const std::uint64_t h = s.derive(base);
  StreamLabel l = base;
  l.run_id = 9;
  EXPECT_NE(s.derive(l), h);
  l = base;
  l.iteration = 9;
  EXPECT_NE(s.derive(l), h);
  l = base;
  l.rollout_id = 9;
  EXPECT_NE(s.derive(l), h);
  l = base;
  l.sub = 9;
  EXPECT_NE(s.derive(l), h);
  l = base;
  l.purpose = StreamPurpose::perturbation;
  EXPECT_NE(s.derive(l), h);
  EXPECT_NE(SeedSpec{43}.derive(base), h);
}

TEST(Sphere, NormIsExactlyRadiusAndMeanNearZero) {
  const SeedSpec s{7};
  Matrix mean = Matrix::Zero(2, 3);
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    Matrix u = sample_sphere_perturbation(2, 3, 0.05, s, StreamLabel{0, 0, static_cast<std::uint64_t>(i), 0,
                                                                     StreamPurpose::perturbation});
    EXPECT_NEAR(u.norm(), 0.05, 1e-15);
    mean += u;
  }
  mean /= draws;
  // each entry has variance r^2 / 6
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5.0 * 0.05 / std::sqrt(6.0 * draws));
}

TEST(InitialState, ZeroCovarianceGivesOrigin) {
  Rng rng(1);
  const InitialState s = sample_initial_state(Matrix::Zero(2, 2), 1.0, rng);
  EXPECT_EQ(s.x0.norm(), 0.0);
  EXPECT_EQ(s.rejections, 0u);
}

TEST(InitialState, LooseBoundMatchesChiSquareMean) {
  Rng rng(2);
  double sum = 0.0;
  std::uint64_t rejections = 0;
  for (int i = 0; i < 10000; ++i) {
    const InitialState s = sample_initial_state(Matrix::Identity(3, 3), 10.0, rng);
    sum += s.x0.squaredNorm();
    rejections += s.rejections;
  }
  EXPECT_EQ(rejections, 0u);
  EXPECT_NEAR(sum / 10000.0, 3.0, 0.1);
}

TEST(InitialState, TightBoundEnforcedWithManyRejections) {
  // in two dimensions P(||x|| <= 0.01) = 1 - exp(-0.00005), about 5e-5
  Rng rng(3);
  std::uint64_t rejections = 0;
  for (int i = 0; i < 20; ++i) {
    const InitialState s = sample_initial_state(Matrix::Identity(2, 2), 0.01, rng);
    EXPECT_LE(s.x0.norm(), 0.01);
    rejections += s.rejections;
  }
  EXPECT_GT(rejections, 20u * 1000u);
}

TEST(InitialState, HopelessBoundIsAConfigError) {
  Rng rng(4);
  // three dimensions, L0 = 0.01: acceptance about 2.7e-7, below the 1e-6 floor
  EXPECT_THROW(sample_initial_state(Matrix::Identity(3, 3), 0.01, rng), ConfigError);
}

TEST(Simulate, NoiselessGeometricDecay) {
  // a plant needs positive definite noise, so drive the closed loop directly with a zero factor
  Rng rng(5);
  Vector x0(1);
  x0 << 1.0;
  const auto out = simulate_closed_loop(scalar(0.5), scalar(0.0), Gain(scalar(0.0)), x0, 3, rng);
  const auto& traj = std::get<Trajectory>(out);
  ASSERT_EQ(traj.length(), 3u);
  EXPECT_EQ(traj.states(0, 0), 1.0);
  EXPECT_EQ(traj.states(0, 1), 0.5);
  EXPECT_EQ(traj.states(0, 2), 0.25);
}

TEST(Simulate, OverflowIsReportedNotThrown) {
  const PlantModel p(scalar(1e200), scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  Rng rng(6);
  Vector x0(1);
  x0 << 1.0;
  const auto out = simulate(p, Gain(scalar(0.0)), x0, 10, rng, StreamLabel{3, 0, 0, 0, StreamPurpose::noise});
  ASSERT_TRUE(std::holds_alternative<RolloutOverflow>(out));
  EXPECT_EQ(std::get<RolloutOverflow>(out).label.run_id, 3u);
  EXPECT_LE(std::get<RolloutOverflow>(out).step, 3u);
}

TEST(Simulate, LongRunVarianceMatchesStationaryCovariance) {
  const PlantModel p = testutil::s1_plant();
  Rng rng(8);
  Vector x0(1);
  x0 << 0.0;
  const auto traj = std::get<Trajectory>(simulate(p, Gain(scalar(-0.5)), x0, 10000, rng));
  EXPECT_NEAR(empirical_covariance(traj)(0, 0), 1.0, 0.05);
}

TEST(Simulate, EmpiricalCostMatchesFiniteHorizonExpectation) {
  const PlantModel p = testutil::s1_plant();
  const Gain k(scalar(-0.5));
  const SeedSpec seeds{9};
  const std::size_t l = 10000;
  double sum = 0.0;
  Matrix cov = Matrix::Zero(1, 1);
  for (std::uint64_t run = 0; run < 100; ++run) {
    Rng x0_rng = seeds.stream({run, 0, 0, 0, StreamPurpose::initial_state});
    const InitialState s = sample_initial_state(p.sigma_0(), 10.0, x0_rng);
    const auto traj = std::get<Trajectory>(simulate(p, k, s.x0, l, seeds, {run, 0, 0, 0, StreamPurpose::noise}));
    sum += empirical_cost(traj, p.q(), p.r(), k);
    cov += empirical_covariance(traj);
  }
  const auto ref = finite_horizon_quantities(p, k, l);
  EXPECT_NEAR(sum / 100.0, ref.C_l, 0.03 * ref.C_l);
  EXPECT_NEAR(cov(0, 0) / 100.0, ref.Sigma_l(0, 0), 0.05 * ref.Sigma_l(0, 0));
}

TEST(Simulate, ErgodicCostApproachesAverageCost) {
  const PlantModel p = testutil::s1_plant();
  const Gain k(scalar(-0.3));
  const double c = exact_quantities(p, k).cost;
  Vector x0(1);
  x0 << 0.0;
  double err_short = 0.0, err_long = 0.0;
  for (std::uint64_t run = 0; run < 40; ++run) {
    Rng a(100 + run), b(200 + run);
    err_short += std::abs(empirical_cost(std::get<Trajectory>(simulate(p, k, x0, 100, a)), p.q(), p.r(), k) - c);
    err_long += std::abs(empirical_cost(std::get<Trajectory>(simulate(p, k, x0, 10000, b)), p.q(), p.r(), k) - c);
  }
  // error shrinks like l^{-1/2}: a factor of ten between the two lengths
  EXPECT_LT(err_long, 0.25 * err_short);
}

TEST(Oracle, CustomStageCostEvaluatorIsUsed) {
  const PlantRolloutOracle oracle(testutil::s1_plant(),
                                  [](const Trajectory& t) { return static_cast<double>(t.length()); });
  Rng rng(1);
  Vector x0(1);
  x0 << 0.2;
  const auto out = oracle.rollout(Gain(scalar(-0.5)), x0, 7, rng, {});
  EXPECT_EQ(oracle.stage_cost(std::get<Trajectory>(out)), 7.0);
}

TEST(RolloutConfig, ValidationListsProblems) {
  RolloutConfig c{0, 0, -1.0, 1.0};
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("n must"), std::string::npos);
    EXPECT_NE(m.find("l must"), std::string::npos);
    EXPECT_NE(m.find("r must"), std::string::npos);
  }
}
