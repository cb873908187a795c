#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "pglqr/control/exact.hpp"
#include "pglqr/estimation/zeroth_order.hpp"
#include "pglqr/optim/model_based.hpp"

namespace pglqr {

struct GradientSample {
  Matrix gradient;
  std::optional<Matrix> covariance;
  double cost_estimate = 0.0;
  bool failed = false;
  std::string failure;
};

// Where a model-free loop gets its gradient (and covariance) from.
class GradientSource {
 public:
  virtual ~GradientSource() = default;
  virtual Index state_dim() const = 0;
  virtual Index input_dim() const = 0;
  virtual GradientSample sample(const Gain& k, const RolloutConfig& cfg, bool need_covariance,
                                std::uint64_t iteration) = 0;
};

namespace detail {

inline std::string overflow_message(const std::optional<std::size_t>& idx) {
  return "rollout " + (idx ? std::to_string(*idx) : std::string("?")) + " overflowed";
}

}  // namespace detail

class SphereGradientSource final : public GradientSource {
 public:
  SphereGradientSource(const RolloutOracle& oracle, SeedSpec seeds, std::uint64_t run_id, std::size_t threads = 1)
      : oracle_(oracle), seeds_(seeds), run_id_(run_id), threads_(threads) {}

  Index state_dim() const override { return oracle_.state_dim(); }
  Index input_dim() const override { return oracle_.input_dim(); }

  GradientSample sample(const Gain& k, const RolloutConfig& cfg, bool need_covariance,
                        std::uint64_t iteration) override {
    EstimatorOptions opt{seeds_, run_id_, iteration, false, threads_};
    GradientCovarianceEstimate est = estimate_gradient_covariance(oracle_, k, cfg, opt);
    GradientSample out;
    out.failed = est.gradient.failed;
    if (out.failed) {
      out.failure = detail::overflow_message(est.gradient.failed_rollout);
      return out;
    }
    out.gradient = std::move(est.gradient.value);
    out.cost_estimate = est.gradient.mean_cost;
    if (need_covariance) out.covariance = std::move(est.covariance.value);
    return out;
  }

 private:
  const RolloutOracle& oracle_;
  SeedSpec seeds_;
  std::uint64_t run_id_;
  std::size_t threads_;
};

class BaselineGradientSource final : public GradientSource {
 public:
  BaselineGradientSource(const RolloutOracle& oracle, std::size_t n_v, SeedSpec seeds, std::uint64_t run_id,
                         std::size_t threads = 1)
      : oracle_(oracle), n_v_(n_v), seeds_(seeds), run_id_(run_id), threads_(threads) {}

  Index state_dim() const override { return oracle_.state_dim(); }
  Index input_dim() const override { return oracle_.input_dim(); }

  GradientSample sample(const Gain& k, const RolloutConfig& cfg, bool need_covariance,
                        std::uint64_t iteration) override {
    if (need_covariance) throw UsageError("the baseline estimator does not produce covariance estimates");
    EstimatorOptions opt{seeds_, run_id_, iteration, false, threads_};
    GradientEstimate est = estimate_gradient_vr(oracle_, k, cfg, n_v_, opt);
    GradientSample out;
    out.failed = est.failed;
    if (out.failed) {
      out.failure = detail::overflow_message(est.failed_rollout);
      return out;
    }
    out.gradient = std::move(est.value);
    out.cost_estimate = est.mean_cost;
    return out;
  }

 private:
  const RolloutOracle& oracle_;
  std::size_t n_v_;
  SeedSpec seeds_;
  std::uint64_t run_id_;
  std::size_t threads_;
};

// Returns exact model quantities; used to check the loops against their model-based twins.
class ExactGradientSource final : public GradientSource {
 public:
  explicit ExactGradientSource(PlantModel plant) : plant_(std::move(plant)) {}

  Index state_dim() const override { return plant_.state_dim(); }
  Index input_dim() const override { return plant_.input_dim(); }

  GradientSample sample(const Gain& k, const RolloutConfig&, bool need_covariance, std::uint64_t) override {
    GradientSample out;
    if (!is_stabilizing(plant_, k)) {
      out.failed = true;
      out.failure = "gain is not stabilizing";
      return out;
    }
    ClosedLoopQuantities q = exact_quantities(plant_, k);
    out.gradient = q.grad;
    out.cost_estimate = q.cost;
    if (need_covariance) out.covariance = q.Sigma;
    return out;
  }

 private:
  PlantModel plant_;
};

enum class CertificateMode { online, offline };

inline const char* to_string(CertificateMode m) { return m == CertificateMode::online ? "online" : "offline"; }

// Rollout parameters derived from the sample-complexity certificates.
struct CertifiedRollouts {
  double eps = 0.0;
  double delta = 0.0;
  double sigma = 0.5;
  CertificateMode mode = CertificateMode::online;
  PlantNorms norms;
  double sigma_star_norm = 0.0;
  double c_star = 0.0;
  double L0 = 1.0;
  BoundOptions bound_options;
  double max_rollouts = 1e7;
  double max_length = 1e6;
};

struct ModelFreeConfig {
  std::optional<RolloutConfig> rollouts;
  std::optional<CertifiedRollouts> certified;
  StepSchedule schedule;
  StopCriteria stop;
  std::size_t max_consecutive_failures = 3;
  std::optional<double> initial_cost;               // C(K0) or a pilot estimate
  std::function<double(const Gain&)> exact_cost;    // model-side cost for the trace, when available
  std::optional<double> c_star;
  double covariance_floor = 1e-8;
};

namespace detail {

inline RolloutConfig certified_plan(const CertifiedRollouts& cert, double cost, bool natural) {
  BoundOptions bo = cert.bound_options;
  bo.c_star = std::min(cert.c_star, cost);
  const RequiredAccuracies acc = required_accuracies(cert.norms, cost, cert.sigma_star_norm, cert.eps, cert.sigma, bo);
  RolloutConfig cfg;
  cfg.L0 = cert.L0;
  if (!natural) {
    const GradientCertificate g = gradient_certificate(cert.norms, cost, ErrorBudget::split(acc.eps_pgd, cert.delta),
                                                       cert.L0, bo);
    cfg.r = g.r_used;
    cfg.l = static_cast<std::size_t>(std::min(g.l_min, cert.max_length + 1));
    const double n = g.n_required();
    if (!(n <= cert.max_rollouts) || !(g.l_min <= cert.max_length))
      throw DomainError("certified plan needs n = " + std::to_string(n) + ", l = " + std::to_string(g.l_min) +
                        ", beyond the configured caps");
    cfg.n = static_cast<std::size_t>(n);
    return cfg;
  }
  const double half = 1.0 - std::sqrt(1.0 - cert.delta);
  const GradientCertificate g =
      gradient_certificate(cert.norms, cost, ErrorBudget::split(acc.eps_npg_grad, half), cert.L0, bo);
  const CovarianceCertificate v =
      covariance_certificate(cert.norms, cost, CovErrorBudget::split(acc.eps_npg_cov, half), cert.L0, bo);
  const double n = std::max(g.n_required(), v.n_min);
  const double l = std::max(g.l_min, v.l_min);
  if (!(n <= cert.max_rollouts) || !(l <= cert.max_length))
    throw DomainError("certified plan needs n = " + std::to_string(n) + ", l = " + std::to_string(l) +
                      ", beyond the configured caps");
  cfg.n = static_cast<std::size_t>(n);
  cfg.l = static_cast<std::size_t>(l);
  cfg.r = std::min(g.r_used, v.r_used);
  return cfg;
}

inline double model_free_step(const StepSchedule& s, double cost_hat, Index n_x, bool natural) {
  switch (s.kind) {
    case StepKind::fixed: return s.eta;
    case StepKind::adaptive_certified:
      if (!s.norms) throw UsageError("certified step schedule needs plant norms");
      if (natural) return npg_step_bound(*s.norms, cost_hat);
      return pgd_step_bound(*s.norms, cost_hat, std::min(s.c_star, cost_hat));
    case StepKind::adaptive_empirical:
      if (!s.noise_trace) throw UsageError("empirical step schedule needs Tr(Sigma_w)");
      return empirical_step(s, trace_p_proxy(cost_hat, *s.noise_trace, n_x));
  }
  return 0.0;
}

inline ConvergenceTrace run_model_free(GradientSource& source, const Gain& k0, const ModelFreeConfig& cfg,
                                       bool natural) {
  cfg.schedule.validate();
  if (cfg.rollouts.has_value() == cfg.certified.has_value())
    throw ConfigError("exactly one of explicit rollouts or certified rollouts must be set");
  if (cfg.rollouts) cfg.rollouts->validate();
  if (cfg.certified && !cfg.initial_cost) throw ConfigError("certified rollouts need an initial cost");
  if (k0.inputs() != source.input_dim() || k0.states() != source.state_dim())
    throw ConfigError("initial gain has the wrong shape");
  ConvergenceTrace trace;
  trace.optimizer = natural ? "mf_npg" : "mf_pgd";
  trace.schedule = cfg.schedule.describe();
  trace.c_star = cfg.c_star;
  Gain k = k0;
  std::optional<double> reference_cost;
  std::optional<double> last_estimate = cfg.initial_cost;
  std::optional<RolloutConfig> offline_plan;
  std::size_t failures = 0;
  const Index n_x = source.state_dim();

  auto plan_for = [&]() -> RolloutConfig {
    if (cfg.rollouts) return *cfg.rollouts;
    if (cfg.certified->mode == CertificateMode::offline) {
      if (!offline_plan) offline_plan = certified_plan(*cfg.certified, *cfg.initial_cost, natural);
      return *offline_plan;
    }
    return certified_plan(*cfg.certified, *last_estimate, natural);
  };

  for (std::size_t i = 0;; ++i) {
    IterationRecord rec;
    rec.i = i;
    const bool model_cost = static_cast<bool>(cfg.exact_cost);
    if (model_cost) {
      rec.cost = cfg.exact_cost(k);
      rec.rel_subopt = relative_suboptimality(rec.cost, cfg.c_star);
      if (!reference_cost) reference_cost = rec.cost;
      if (!std::isfinite(rec.cost) || rec.cost > cfg.stop.divergence_factor * *reference_cost) {
        rec.status = IterationStatus::diverged;
        trace.records.push_back(rec);
        trace.reason = TerminalReason::diverged;
        break;
      }
      if (cfg.stop.target_rel_subopt && rec.rel_subopt <= *cfg.stop.target_rel_subopt) {
        trace.records.push_back(rec);
        trace.reason = TerminalReason::target_reached;
        break;
      }
      if (i >= cfg.stop.max_iterations) {
        rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
        trace.records.push_back(rec);
        trace.reason = TerminalReason::max_iterations;
        break;
      }
    }
    GradientSample sample = source.sample(k, plan_for(), natural, i);
    if (sample.failed) {
      // a state overflow means the perturbed closed loop blew up
      if (!model_cost) rec.cost = std::numeric_limits<double>::infinity();
      rec.status = IterationStatus::diverged;
      rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(rec);
      trace.reason = TerminalReason::diverged;
      break;
    }
    last_estimate = sample.cost_estimate;
    rec.grad_norm = sample.gradient.norm();
    if (!model_cost) {
      rec.cost = sample.cost_estimate;
      rec.rel_subopt = relative_suboptimality(rec.cost, cfg.c_star);
      if (!reference_cost) reference_cost = rec.cost;
      if (!std::isfinite(rec.cost) || rec.cost > cfg.stop.divergence_factor * *reference_cost) {
        rec.status = IterationStatus::diverged;
        trace.records.push_back(rec);
        trace.reason = TerminalReason::diverged;
        break;
      }
      if ((cfg.stop.target_rel_subopt && rec.rel_subopt <= *cfg.stop.target_rel_subopt) ||
          i >= cfg.stop.max_iterations) {
        trace.records.push_back(rec);
        trace.reason = i >= cfg.stop.max_iterations ? TerminalReason::max_iterations : TerminalReason::target_reached;
        break;
      }
    }
    Matrix direction = sample.gradient;
    if (!natural) failures = 0;
    if (natural) {
      const Matrix& sigma_hat = *sample.covariance;
      if (!(min_eigenvalue(sigma_hat) >= cfg.covariance_floor)) {
        rec.status = IterationStatus::estimate_failed;
        trace.records.push_back(rec);
        if (++failures >= cfg.max_consecutive_failures) {
          trace.reason = TerminalReason::estimate_failures;
          break;
        }
        continue;
      }
      failures = 0;
      direction = natural_direction(sample.gradient, sigma_hat);
    }
    const double eta = model_free_step(cfg.schedule, sample.cost_estimate, n_x, natural);
    rec.step = eta;
    trace.records.push_back(rec);
    k = Gain(k.matrix() - eta * direction);
  }
  trace.final_gain = k;
  return trace;
}

}  // namespace detail

inline ConvergenceTrace run_mf_pgd(GradientSource& source, const Gain& k0, const ModelFreeConfig& cfg) {
  return detail::run_model_free(source, k0, cfg, false);
}

inline ConvergenceTrace run_mf_npg(GradientSource& source, const Gain& k0, const ModelFreeConfig& cfg) {
  return detail::run_model_free(source, k0, cfg, true);
}

}  // namespace pglqr
