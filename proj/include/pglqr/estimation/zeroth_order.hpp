#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "pglqr/core/parallel.hpp"
#include "pglqr/sim/oracle.hpp"

namespace pglqr {

struct EstimatorOptions {
  SeedSpec seeds;
  std::uint64_t run_id = 0;
  std::uint64_t iteration = 0;
  bool keep_terms = false;
  std::size_t threads = 1;
};

struct RolloutTerm {
  std::size_t k = 0;
  double cost_hat = 0.0;
  double baseline_hat = 0.0;
  double u_frobenius = 0.0;
  Matrix contribution;  // (n_x n_u / r^2)(cost_hat - baseline_hat) U_k
};

struct GradientEstimate {
  Matrix value;
  std::size_t n_used = 0;
  std::size_t l_used = 0;
  double r_used = 0.0;
  std::vector<RolloutTerm> terms;
  SeedSpec seeds;
  std::uint64_t run_id = 0;
  std::uint64_t iteration = 0;
  bool failed = false;
  std::optional<std::size_t> failed_rollout;
  double mean_cost = 0.0;  // mean of the perturbed rollout costs
  std::uint64_t rejections = 0;
};

struct CovarianceEstimate {
  Matrix value;
  std::size_t n_used = 0;
  std::size_t l_used = 0;
  double r_used = 0.0;
  SeedSpec seeds;
  std::uint64_t run_id = 0;
  std::uint64_t iteration = 0;
  bool failed = false;
  std::optional<std::size_t> failed_rollout;
};

struct BaselineEstimate {
  double value = 0.0;
  std::size_t n_v_used = 0;
  Vector x0;
  bool failed = false;
  std::optional<std::size_t> failed_rollout;
};

struct GradientCovarianceEstimate {
  GradientEstimate gradient;
  CovarianceEstimate covariance;
};

namespace detail {

inline StreamLabel label_for(const EstimatorOptions& opt, std::size_t k, StreamPurpose purpose,
                             std::uint64_t sub = 0) {
  return StreamLabel{opt.run_id, opt.iteration, static_cast<std::uint64_t>(k), sub, purpose};
}

struct PerturbedRollout {
  Matrix u;
  double cost = 0.0;
  double baseline = 0.0;
  Matrix covariance;
  std::uint64_t rejections = 0;
  bool overflow = false;
};

}  // namespace detail

// Average cost of n_v unperturbed rollouts from x0 under K; rollout_id selects the substreams.
inline BaselineEstimate estimate_baseline(const RolloutOracle& oracle, const Gain& k, const Vector& x0,
                                          std::size_t n_v, std::size_t l, const EstimatorOptions& opt,
                                          std::size_t rollout_id = 0) {
  if (n_v < 1) throw ConfigError("baseline needs at least one rollout");
  BaselineEstimate out;
  out.x0 = x0;
  out.n_v_used = n_v;
  double sum = 0.0;
  for (std::size_t j = 0; j < n_v; ++j) {
    const StreamLabel label = detail::label_for(opt, rollout_id, StreamPurpose::baseline, j);
    Rng rng = opt.seeds.stream(label);
    SimulationOutcome sim = oracle.rollout(k, x0, l, rng, label);
    if (auto* traj = std::get_if<Trajectory>(&sim)) {
      sum += oracle.stage_cost(*traj);
    } else {
      out.failed = true;
      out.failed_rollout = j;
      return out;
    }
  }
  out.value = sum / static_cast<double>(n_v);
  return out;
}

namespace detail {

// Shared driver for the plain and baseline-corrected sphere estimators.
inline GradientCovarianceEstimate sphere_estimate(const RolloutOracle& oracle, const Gain& k,
                                                  const RolloutConfig& cfg, const EstimatorOptions& opt,
                                                  std::size_t n_v) {
  cfg.validate();
  const Index n_u = oracle.input_dim();
  const Index n_x = oracle.state_dim();
  if (k.inputs() != n_u || k.states() != n_x)
    throw ConfigError("gain must be " + std::to_string(n_u) + "x" + std::to_string(n_x));
  std::vector<PerturbedRollout> slots(cfg.n);
  parallel_for(cfg.n, opt.threads, [&](std::size_t i) {
    PerturbedRollout& s = slots[i];
    Rng x0_rng = opt.seeds.stream(label_for(opt, i, StreamPurpose::initial_state));
    InitialState init = oracle.sample_initial_state(cfg.L0, x0_rng);
    s.rejections = init.rejections;
    if (n_v > 0) {
      BaselineEstimate b = estimate_baseline(oracle, k, init.x0, n_v, cfg.l, opt, i);
      if (b.failed) {
        s.overflow = true;
        return;
      }
      s.baseline = b.value;
    }
    Rng u_rng = opt.seeds.stream(label_for(opt, i, StreamPurpose::perturbation));
    s.u = sample_sphere_perturbation(n_u, n_x, cfg.r, u_rng);
    const StreamLabel noise_label = label_for(opt, i, StreamPurpose::noise);
    Rng noise = opt.seeds.stream(noise_label);
    SimulationOutcome sim = oracle.rollout(k + s.u, init.x0, cfg.l, noise, noise_label);
    if (auto* traj = std::get_if<Trajectory>(&sim)) {
      s.cost = oracle.stage_cost(*traj);
      s.covariance = empirical_covariance(*traj);
      if (!std::isfinite(s.cost)) s.overflow = true;
    } else {
      s.overflow = true;
    }
  });

  GradientCovarianceEstimate out;
  GradientEstimate& g = out.gradient;
  CovarianceEstimate& c = out.covariance;
  g.n_used = c.n_used = cfg.n;
  g.l_used = c.l_used = cfg.l;
  g.r_used = c.r_used = cfg.r;
  g.seeds = c.seeds = opt.seeds;
  g.run_id = c.run_id = opt.run_id;
  g.iteration = c.iteration = opt.iteration;
  g.value = Matrix::Zero(n_u, n_x);
  c.value = Matrix::Zero(n_x, n_x);
  const double scale = static_cast<double>(n_x * n_u) / (cfg.r * cfg.r);
  double cost_sum = 0.0;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const PerturbedRollout& s = slots[i];
    g.rejections += s.rejections;
    if (s.overflow) {
      g.failed = c.failed = true;
      g.failed_rollout = c.failed_rollout = i;
      return out;
    }
    Matrix term = scale * (s.cost - s.baseline) * s.u;
    g.value += term;
    c.value += s.covariance;
    cost_sum += s.cost;
    if (opt.keep_terms) g.terms.push_back(RolloutTerm{i, s.cost, s.baseline, s.u.norm(), std::move(term)});
  }
  const double inv_n = 1.0 / static_cast<double>(cfg.n);
  g.value *= inv_n;
  c.value = symmetrize(c.value * inv_n);
  g.mean_cost = cost_sum * inv_n;
  return out;
}

}  // namespace detail

// Plain sphere-smoothing estimator of the gradient and of the state covariance.
inline GradientCovarianceEstimate estimate_gradient_covariance(const RolloutOracle& oracle, const Gain& k,
                                                               const RolloutConfig& cfg,
                                                               const EstimatorOptions& opt = {}) {
  return detail::sphere_estimate(oracle, k, cfg, opt, 0);
}

// Baseline-corrected estimator: cfg.n plays the role of the outer rollout count.
inline GradientEstimate estimate_gradient_vr(const RolloutOracle& oracle, const Gain& k, const RolloutConfig& cfg,
                                             std::size_t n_v, const EstimatorOptions& opt = {}) {
  if (n_v < 1) throw ConfigError("baseline needs at least one rollout");
  return detail::sphere_estimate(oracle, k, cfg, opt, n_v).gradient;
}

struct EstimatorSummary {
  std::size_t count = 0;
  Matrix mean;
  Matrix variance;  // component-wise, unbiased
  std::optional<double> mean_error;    // mean Frobenius error against the reference
  std::optional<double> median_error;
  std::vector<double> errors;
};

inline EstimatorSummary estimator_diagnostics(const std::vector<Matrix>& values,
                                              const std::optional<Matrix>& reference = std::nullopt) {
  if (values.empty()) throw UsageError("estimator_diagnostics needs at least one estimate");
  EstimatorSummary out;
  out.count = values.size();
  out.mean = Matrix::Zero(values.front().rows(), values.front().cols());
  for (const auto& v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  out.variance = Matrix::Zero(out.mean.rows(), out.mean.cols());
  if (values.size() > 1) {
    for (const auto& v : values) out.variance += (v - out.mean).cwiseAbs2();
    out.variance /= static_cast<double>(values.size() - 1);
  }
  if (reference) {
    for (const auto& v : values) out.errors.push_back((v - *reference).norm());
    double sum = 0.0;
    for (double e : out.errors) sum += e;
    out.mean_error = sum / static_cast<double>(out.errors.size());
    std::vector<double> sorted = out.errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    out.median_error = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  }
  return out;
}

inline EstimatorSummary estimator_diagnostics(const std::vector<GradientEstimate>& estimates,
                                              const std::optional<Matrix>& reference = std::nullopt) {
  std::vector<Matrix> values;
  values.reserve(estimates.size());
  for (const auto& e : estimates) values.push_back(e.value);
  return estimator_diagnostics(values, reference);
}

// Columns: k, cost_hat, baseline_hat, u_frobenius, contribution_frobenius
inline void write_estimator_terms_csv(std::ostream& os, const GradientEstimate& est) {
  const auto old_precision = os.precision(17);
  os << "k,cost_hat,baseline_hat,u_frobenius,contribution_frobenius\n";
  for (const auto& t : est.terms)
    os << t.k << ',' << t.cost_hat << ',' << t.baseline_hat << ',' << t.u_frobenius << ','
       << t.contribution.norm() << '\n';
  os.precision(old_precision);
}

}  // namespace pglqr
