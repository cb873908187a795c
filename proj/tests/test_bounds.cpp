#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace pglqr;

namespace {

PlantNorms s1_norms() { return plant_norms(testutil::s1_plant()); }

// scalar S1 optimum, from p^2 - 0.25 p - 1 = 0
const double kS1CostStar = (0.25 + std::sqrt(4.0625)) / 2.0;

}  // namespace

TEST(PlantNormsTest, ScalarValues) {
  const PlantNorms n = s1_norms();
  EXPECT_EQ(n.n_x, 1);
  EXPECT_EQ(n.n_u, 1);
  EXPECT_DOUBLE_EQ(n.norm_a, 0.5);
  EXPECT_DOUBLE_EQ(n.lambda_w, 1.0);
  EXPECT_DOUBLE_EQ(n.trace_w, 1.0);
  EXPECT_DOUBLE_EQ(n.norm_0, 1.0);
}

TEST(Perturbation, ScalarTrustRadiusAndCovarianceConstant) {
  const PerturbationConstants k = perturbation_constants(s1_norms(), 4.0 / 3.0);
  EXPECT_NEAR(k.h, 0.09375, 1e-15);
  EXPECT_NEAR(k.h_sigma, 128.0 / 9.0, 1e-13);
  EXPECT_NEAR(k.h_grad, k.alpha1 + k.alpha3, 1e-12 * k.h_grad);
}

TEST(Perturbation, HomogeneityInCost) {
  const PerturbationConstants a = perturbation_constants(s1_norms(), 2.0);
  const PerturbationConstants b = perturbation_constants(s1_norms(), 4.0);
  EXPECT_DOUBLE_EQ(b.h / a.h, 0.5);
  EXPECT_DOUBLE_EQ(b.h_sigma / a.h_sigma, 4.0);
}

TEST(Perturbation, DomainErrors) {
  EXPECT_THROW(perturbation_constants(s1_norms(), 0.0), DomainError);
  BoundOptions opt;
  opt.c_star = 3.0;
  EXPECT_THROW(perturbation_constants(s1_norms(), 2.0, opt), DomainError);
}

TEST(StepBounds, NaturalGradientPlugIn) {
  EXPECT_NEAR(npg_step_bound(s1_norms(), 4.0 / 3.0), 3.0 / 14.0, 1e-15);
  PlantNorms unit = s1_norms();
  EXPECT_DOUBLE_EQ(npg_step_bound(unit, 1.0), 0.25);
  double prev = npg_step_bound(unit, 1.0);
  for (double c = 2.0; c < 1e6; c *= 4.0) {
    const double v = npg_step_bound(unit, c);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(npg_step_bound(unit, -1.0), DomainError);
}

TEST(StepBounds, GradientStepGoldenAndMonotone) {
  // plug-in values computed separately with c_star = 0
  EXPECT_NEAR(pgd_step_bound(s1_norms(), kS1CostStar), 0.0034578352196621724, 1e-15);
  EXPECT_NEAR(pgd_step_bound(s1_norms(), 4.0 / 3.0), 0.0018685987740324347, 1e-15);
  double prev = pgd_step_bound(s1_norms(), kS1CostStar, kS1CostStar);
  for (int i = 1; i <= 50; ++i) {
    const double c = kS1CostStar * (1.0 + 9.0 * i / 50.0);
    const double v = pgd_step_bound(s1_norms(), c, kS1CostStar);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(StepBounds, OneCertifiedStepFromZeroDecreasesCost) {
  const PlantModel p = testutil::s1_plant();
  const Gain k0(testutil::scalar(0.0));
  const ClosedLoopQuantities q0 = exact_quantities(p, k0);
  const double eta = pgd_step_bound(s1_norms(), q0.cost);
  const double c1 = exact_quantities(p, Gain(k0.matrix() - eta * q0.grad)).cost;
  // C(K1) - C* <= (1 - 2 eta lambda_R lambda_W^2 / ||Sigma*||)(C(K0) - C*)
  const double sigma_star = 1.0 / (1.0 - std::pow(0.5 - 0.5 * kS1CostStar / (1.0 + kS1CostStar), 2));
  EXPECT_LE(c1 - kS1CostStar, (1.0 - 2.0 * eta / sigma_star) * (q0.cost - kS1CostStar));
}

TEST(StateBound, PlugInValues) {
  // 1 + 100 / (1 - 0.9^(1/100))
  EXPECT_NEAR(state_bound(1.0, 100.0, 1.0, 0.1), 1.0 + 100.0 / (1.0 - std::pow(0.9, 0.01)), 1e-6);
  EXPECT_NEAR(state_bound(1.0, 100.0, 1.0, 0.1), 94963.2246, 1e-3);
  EXPECT_NEAR(state_bound(0.0, 1.0, 1.0, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(state_bound(0.0, 1.0, 1.0, 0.5, StateBoundMode::chebyshev), std::sqrt(2.0), 1e-15);
  // delta_x close to one: the per-step tail tends to one
  EXPECT_NEAR(state_bound(2.0, 2.0, 3.0, 1.0 - 1e-12), 2.0 + 6.0, 1e-4);
  EXPECT_THROW(state_bound(1.0, 10.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(state_bound(1.0, 0.5, 1.0, 0.1), DomainError);
}

TEST(FiniteHorizon, LengthCoreForScalar) {
  const double raw = finite_horizon_length_cost(s1_norms(), 4.0 / 3.0, 0.1);
  EXPECT_NEAR(raw, 26.666666666666668 * (4.0 / 3.0 + 16.0 / 9.0 + 4.0 / 3.0), 1e-9);
  EXPECT_EQ(std::ceil(raw), 119.0);
}

TEST(FiniteHorizon, CertifiedLengthMeetsAccuracy) {
  const PlantModel p = testutil::s1_plant();
  const Gain k(testutil::scalar(0.0));
  const ClosedLoopQuantities q = exact_quantities(p, k);
  for (double eps : {1.0, 0.1, 0.01}) {
    const auto l = static_cast<std::size_t>(std::ceil(finite_horizon_length_cost(s1_norms(), q.cost, eps)));
    const auto fh = finite_horizon_quantities(p, k, l);
    EXPECT_LE(std::abs(fh.C_l - q.cost), eps);
    EXPECT_LE((fh.Sigma_l - q.Sigma).norm(), eps);
  }
}

TEST(Budgets, SplitsRecombine) {
  const ErrorBudget b = ErrorBudget::split(0.4, 0.2);
  EXPECT_DOUBLE_EQ(b.eps(), 0.4);
  EXPECT_NEAR(b.delta(), 0.2, 1e-15);
  const CovErrorBudget c = CovErrorBudget::split(0.3, 0.1);
  EXPECT_NEAR(c.eps(), 0.3, 1e-15);
  EXPECT_NEAR(c.delta(), 0.1, 1e-15);
  EXPECT_THROW(ErrorBudget::split(0.0, 0.1), DomainError);
  EXPECT_THROW(ErrorBudget::split(0.1, 1.0), DomainError);
  ErrorBudget bad = b;
  bad.eps_n = -1.0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(GradientCert, RadiusBranchesAndPositivity) {
  const ErrorBudget b{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  const PerturbationConstants k = perturbation_constants(s1_norms(), 4.0 / 3.0);
  const GradientCertificate g = gradient_certificate(s1_norms(), 4.0 / 3.0, b, 3.0);
  EXPECT_DOUBLE_EQ(g.r_accuracy, 0.1 / k.h_grad);
  EXPECT_DOUBLE_EQ(g.r_max, std::min({k.h, k.b_gain, 0.1 / k.h_grad}));
  for (double v : {g.r_max, g.l_min, g.N1, g.N2, g.c_bar, g.alpha4, g.alpha5, g.alpha6, g.alpha7, g.alpha8}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  EXPECT_GE(g.l_min, 1.0);
  EXPECT_GE(g.N1, 1.0);
}

TEST(GradientCert, RolloutCountGrowthInAccuracy) {
  ErrorBudget b{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  const double n1 = gradient_certificate(s1_norms(), 4.0 / 3.0, b, 3.0).N1_raw;
  b.eps_n = 0.01;
  const double n2 = gradient_certificate(s1_norms(), 4.0 / 3.0, b, 3.0).N1_raw;
  EXPECT_GT(n2 / n1, 10.0);
  EXPECT_LT(n2 / n1, 100.0);
}

TEST(CovarianceCert, LengthSharedAndRateInAccuracy) {
  CovErrorBudget b{0.1, 0.1, 0.1, 0.1, 0.1};
  const CovarianceCertificate v = covariance_certificate(s1_norms(), 4.0 / 3.0, b, 3.0);
  EXPECT_EQ(v.l_min, 119.0);
  b.eps_n = 0.01;
  const CovarianceCertificate w = covariance_certificate(s1_norms(), 4.0 / 3.0, b, 3.0);
  // 1/eps^2 leading term with a 1/eps cross term: the ratio sits in (10, 100]
  EXPECT_GT(w.n_min_raw / v.n_min_raw, 10.0);
  EXPECT_LE(w.n_min_raw / v.n_min_raw, 100.0);
  double prev = 0.0;
  for (double dx : {0.1, 1e-2, 1e-4, 1e-8}) {
    b.delta_x = dx;
    const double n = covariance_certificate(s1_norms(), 4.0 / 3.0, b, 3.0).n_min_raw;
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(VrCert, ZeroBaselineDegeneratesToPlain) {
  const ErrorBudget b{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  VrBudget vr;
  vr.eps_v = 0.5;
  const VrCertificate v = vr_certificate(s1_norms(), 4.0 / 3.0, b, 0.0, 0.0, 3.0, std::nullopt, vr);
  EXPECT_DOUBLE_EQ(v.N3, v.N2);
  EXPECT_TRUE(v.reduces_rollouts());
}

TEST(VrCert, HighNoiseReducesRollouts) {
  const ErrorBudget b = ErrorBudget::split(0.4, 0.2);
  const double c = 4.0 / 3.0;
  const GradientCertificate g = gradient_certificate(s1_norms(), c, b, 3.0);
  // a baseline bound at half the sample-cost ceiling, estimated exactly
  const double bs = 0.5 * g.c_bar;
  const VrCertificate v = vr_certificate(s1_norms(), c, b, bs, bs, 3.0);
  EXPECT_LE(v.N3, v.N2);
  VrBudget small, half;
  small.eps_v = 0.1;
  half.eps_v = 0.05;
  const double r = vr_certificate(s1_norms(), c, b, bs, bs, 3.0, 10, half).n_tilde_raw /
                   vr_certificate(s1_norms(), c, b, bs, bs, 3.0, 10, small).n_tilde_raw;
  EXPECT_GT(r, 2.0);
  EXPECT_LE(r, 4.0);
}

TEST(Accuracies, LinearInSigmaAndEps) {
  const RequiredAccuracies a = required_accuracies(s1_norms(), 4.0 / 3.0, 1.05, 0.1, 0.5);
  const RequiredAccuracies b = required_accuracies(s1_norms(), 4.0 / 3.0, 1.05, 0.2, 0.5);
  const RequiredAccuracies c = required_accuracies(s1_norms(), 4.0 / 3.0, 1.05, 0.1, 0.25);
  EXPECT_NEAR(b.eps_pgd / a.eps_pgd, 2.0, 1e-14);
  EXPECT_NEAR(b.eps_npg_cov / a.eps_npg_cov, 2.0, 1e-14);
  EXPECT_NEAR(c.eps_npg_grad / a.eps_npg_grad, 0.5, 1e-14);
  EXPECT_NEAR(a.eps_pgd / a.eps_npg_grad, 4.0, 1e-14);
  EXPECT_THROW(required_accuracies(s1_norms(), 4.0 / 3.0, 1.05, 0.1, 1.0), DomainError);
}

TEST(Iterations, LogLawAndGolden) {
  const double sigma_star = 1.058156305651438;
  ContractionInputs in;
  in.c0 = 4.0 / 3.0;
  in.c_star = kS1CostStar;
  in.sigma_star_norm = sigma_star;
  in.eta_pgd = pgd_step_bound(s1_norms(), 4.0 / 3.0);
  in.eps = 1e-3;
  EXPECT_EQ(iteration_counts(s1_norms(), in).pgd, 1501.0);
  in.eps = in.c0 - in.c_star;
  const IterationCounts zero = iteration_counts(s1_norms(), in);
  EXPECT_EQ(zero.pgd, 0.0);
  EXPECT_EQ(zero.gauss_newton, 0.0);
  // halving eps adds (||Sigma*|| / lambda_W) log 2 Gauss-Newton iterations, up to ceiling
  in.eps = 1e-3;
  const double a = iteration_counts(s1_norms(), in).gauss_newton;
  in.eps = 5e-4;
  const double b = iteration_counts(s1_norms(), in).gauss_newton;
  EXPECT_NEAR(b - a, sigma_star * std::log(2.0), 1.0);
}
