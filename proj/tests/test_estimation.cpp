#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <sstream>

#include "test_util.hpp"

using namespace pglqr;
using testutil::scalar;

namespace {

// Oracle whose rollout cost is a chosen function of the gain; states are all zero.
class GainFunctionOracle final : public RolloutOracle {
 public:
  GainFunctionOracle(Index nx, Index nu, std::function<double(const Matrix&)> f) : nx_(nx), nu_(nu), f_(std::move(f)) {}
  Index state_dim() const override { return nx_; }
  Index input_dim() const override { return nu_; }
  InitialState sample_initial_state(double, Rng&) const override { return {Vector::Zero(nx_), 0}; }
  SimulationOutcome rollout(const Gain& k, const Vector&, std::size_t l, Rng&, const StreamLabel& label) const override {
    return Trajectory{Matrix::Zero(nx_, static_cast<Index>(l)), k, label};
  }
  double stage_cost(const Trajectory& t) const override { return f_(t.gain_used.matrix()); }

 private:
  Index nx_, nu_;
  std::function<double(const Matrix&)> f_;
};

double s1_exact_gradient_at_deadbeat() {
  // C(k) = (1 + k^2) / (1 - (0.5 + k)^2); derivative at k = -0.5 is 2k = -1
  return -1.0;
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(SphereEstimator, ZeroCostGivesZeroGradient) {
  const GainFunctionOracle oracle(3, 2, [](const Matrix&) { return 0.0; });
  const auto est = estimate_gradient_covariance(oracle, Gain(Matrix::Zero(2, 3)), {50, 5, 0.1, 1.0});
  EXPECT_FALSE(est.gradient.failed);
  EXPECT_EQ(est.gradient.value.norm(), 0.0);
  EXPECT_EQ(est.covariance.value.norm(), 0.0);
}

TEST(SphereEstimator, SingleRolloutFormula) {
  // n_x n_u / r^2 * 5 * U with ||U|| = r: norm is 2 * 5 / 0.5 = 20
  const GainFunctionOracle oracle(2, 1, [](const Matrix&) { return 5.0; });
  EstimatorOptions opt;
  opt.keep_terms = true;
  const auto est = estimate_gradient_covariance(oracle, Gain(Matrix::Zero(1, 2)), {1, 3, 0.5, 1.0}, opt);
  EXPECT_NEAR(est.gradient.value.norm(), 20.0, 1e-12);
  ASSERT_EQ(est.gradient.terms.size(), 1u);
  EXPECT_NEAR(est.gradient.terms[0].u_frobenius, 0.5, 1e-15);
  EXPECT_EQ(est.gradient.mean_cost, 5.0);
}

TEST(SphereEstimator, UnbiasedForQuadraticCost) {
  // the sphere average of ||K + U||^2 + <G, K + U> has gradient exactly 2K + G
  Matrix g(2, 2);
  g << 1.0, -2.0, 0.5, 3.0;
  Matrix k0(2, 2);
  k0 << 0.2, 0.0, -0.1, 0.4;
  const GainFunctionOracle oracle(2, 2, [&](const Matrix& k) { return k.squaredNorm() + g.cwiseProduct(k).sum(); });
  EstimatorOptions opt;
  opt.seeds = SeedSpec{11};
  opt.keep_terms = true;
  const std::size_t n = 40000;
  const auto est = estimate_gradient_covariance(oracle, Gain(k0), {n, 1, 0.1, 1.0}, opt);
  const Matrix expected = 2.0 * k0 + g;
  // standard error of each entry from the spread of the per-rollout terms
  Matrix sq = Matrix::Zero(2, 2);
  for (const auto& t : est.gradient.terms) sq += (t.contribution - est.gradient.value).cwiseAbs2();
  const Matrix se = (sq / double(n - 1) / double(n)).cwiseSqrt();
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) EXPECT_LT(std::abs(est.gradient.value(i, j) - expected(i, j)), 4.0 * se(i, j));
}

TEST(SphereEstimator, ConstantCostCancelsUnderBaseline) {
  const GainFunctionOracle oracle(2, 2, [](const Matrix&) { return 7.0; });
  const auto vr = estimate_gradient_vr(oracle, Gain(Matrix::Zero(2, 2)), {20, 4, 0.3, 1.0}, 3);
  EXPECT_EQ(vr.value.norm(), 0.0);
}

TEST(SphereEstimator, ThreadCountDoesNotChangeResult) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  EstimatorOptions a, b;
  a.seeds = b.seeds = SeedSpec{5};
  a.threads = 1;
  b.threads = 3;
  const RolloutConfig cfg{64, 50, 0.05, 3.0};
  const auto ea = estimate_gradient_covariance(oracle, Gain(scalar(-0.5)), cfg, a);
  const auto eb = estimate_gradient_covariance(oracle, Gain(scalar(-0.5)), cfg, b);
  EXPECT_EQ(ea.gradient.value(0, 0), eb.gradient.value(0, 0));
  EXPECT_EQ(ea.covariance.value(0, 0), eb.covariance.value(0, 0));
}

TEST(SphereEstimator, OverflowMarksEstimateFailed) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  // A + B K = 1e200: the first noisy step already overflows
  const auto est = estimate_gradient_covariance(oracle, Gain(scalar(1e200)), {4, 5, 0.05, 3.0});
  EXPECT_TRUE(est.gradient.failed);
  EXPECT_TRUE(est.covariance.failed);
  ASSERT_TRUE(est.gradient.failed_rollout.has_value());
  EXPECT_EQ(*est.gradient.failed_rollout, 0u);
}

TEST(SphereEstimator, RejectsWrongGainShape) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  EXPECT_THROW(estimate_gradient_covariance(oracle, Gain(Matrix::Zero(1, 2)), {4, 5, 0.05, 3.0}), ConfigError);
}

TEST(SphereEstimator, MeanWithinThreeStandardErrorsOnS1) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  std::vector<double> values;
  for (std::uint64_t run = 0; run < 100; ++run) {
    EstimatorOptions opt;
    opt.seeds = SeedSpec{2024};
    opt.run_id = run;
    values.push_back(estimate_gradient_covariance(oracle, Gain(scalar(-0.5)), {200, 200, 0.05, 3.0}, opt)
                         .gradient.value(0, 0));
  }
  const double se = std::sqrt(sample_var(values) / 100.0);
  EXPECT_NEAR(sample_mean(values), s1_exact_gradient_at_deadbeat(), 3.0 * se);
}

TEST(Baseline, MatchesMomentRecursion) {
  // x0 = 1 at K = -0.5: m_0 = 1 and m_{t+1} = 0 * m_t + 1, so every second moment is 1
  double m = 1.0, expected = 0.0;
  for (int t = 0; t < 100; ++t) {
    expected += 1.25 * m;
    m = 0.0 * m + 1.0;
  }
  expected /= 100.0;
  const PlantRolloutOracle oracle(testutil::s1_plant());
  EstimatorOptions opt;
  opt.seeds = SeedSpec{3};
  Vector x0(1);
  x0 << 1.0;
  const BaselineEstimate b = estimate_baseline(oracle, Gain(scalar(-0.5)), x0, 200, 100, opt);
  EXPECT_FALSE(b.failed);
  EXPECT_EQ(b.n_v_used, 200u);
  EXPECT_NEAR(b.value, expected, 0.05 * expected);
}

TEST(Baseline, NeedsAtLeastOneRollout) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  Vector x0 = Vector::Zero(1);
  EXPECT_THROW(estimate_baseline(oracle, Gain(scalar(-0.5)), x0, 0, 10, {}), ConfigError);
  EXPECT_THROW(estimate_gradient_vr(oracle, Gain(scalar(-0.5)), {4, 5, 0.05, 3.0}, 0), ConfigError);
}

TEST(Baseline, PreservesMeanOverPairedRuns) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  std::vector<double> plain, vr;
  for (std::uint64_t run = 0; run < 200; ++run) {
    EstimatorOptions opt;
    opt.seeds = SeedSpec{77};
    opt.run_id = run;
    const RolloutConfig cfg{50, 50, 0.05, 3.0};
    plain.push_back(estimate_gradient_covariance(oracle, Gain(scalar(-0.5)), cfg, opt).gradient.value(0, 0));
    vr.push_back(estimate_gradient_vr(oracle, Gain(scalar(-0.5)), cfg, 5, opt).value(0, 0));
  }
  const double se = std::sqrt(sample_var(plain) / 200.0 + sample_var(vr) / 200.0);
  EXPECT_LT(std::abs(sample_mean(plain) - sample_mean(vr)), 3.0 * se);
  // and the corrected estimator is the less noisy one
  EXPECT_LT(sample_var(vr), sample_var(plain));
}

TEST(Baseline, PerRolloutTermsHaveSmallerSpread) {
  const PlantRolloutOracle oracle(testutil::s1_plant());
  EstimatorOptions opt;
  opt.seeds = SeedSpec{8};
  opt.keep_terms = true;
  const RolloutConfig cfg{2000, 100, 0.05, 3.0};
  const auto plain = estimate_gradient_covariance(oracle, Gain(scalar(-0.5)), cfg, opt).gradient;
  const auto vr = estimate_gradient_vr(oracle, Gain(scalar(-0.5)), cfg, 20, opt);
  std::vector<double> tp, tv;
  for (const auto& t : plain.terms) tp.push_back(t.contribution(0, 0));
  for (const auto& t : vr.terms) tv.push_back(t.contribution(0, 0));
  EXPECT_LT(sample_var(tv), sample_var(tp));
  // paired streams: the perturbed rollouts are shared, only the baselines differ
  EXPECT_EQ(plain.terms[7].cost_hat, vr.terms[7].cost_hat);
}

TEST(Diagnostics, MeanVarianceAndErrors) {
  const std::vector<Matrix> values{scalar(1.0), scalar(3.0), scalar(8.0)};
  const EstimatorSummary s = estimator_diagnostics(values, scalar(2.0));
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.mean(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(s.variance(0, 0), (9.0 + 1.0 + 16.0) / 2.0);
  EXPECT_DOUBLE_EQ(*s.median_error, 1.0);
  EXPECT_DOUBLE_EQ(*s.mean_error, (1.0 + 1.0 + 6.0) / 3.0);
  EXPECT_THROW(estimator_diagnostics(std::vector<Matrix>{}), UsageError);
}

TEST(Diagnostics, TermsCsvHasOneRowPerRollout) {
  const GainFunctionOracle oracle(1, 1, [](const Matrix&) { return 2.0; });
  EstimatorOptions opt;
  opt.keep_terms = true;
  const auto est = estimate_gradient_covariance(oracle, Gain(scalar(0.0)), {4, 2, 0.1, 1.0}, opt);
  std::ostringstream os;
  write_estimator_terms_csv(os, est.gradient);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(text.rfind("k,cost_hat", 0), 0u);
}
