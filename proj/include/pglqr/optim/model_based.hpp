#pragma once

#include <functional>

#include "pglqr/bounds/certificates.hpp"
#include "pglqr/control/riccati.hpp"
#include "pglqr/optim/schedule.hpp"
#include "pglqr/optim/trace.hpp"

namespace pglqr {

// Natural gradient direction grad * Sigma^{-1}, solved rather than inverted.
inline Matrix natural_direction(const Matrix& grad, const Matrix& sigma) {
  return sigma.ldlt().solve(grad.transpose()).transpose();
}

// Policy improvement map -(R + B^T P B)^{-1} B^T P A for the value matrix P.
inline Matrix policy_improvement(const PlantModel& plant, const Matrix& p) { return riccati_gain(plant, p); }

namespace detail {

enum class ModelBasedMethod { pgd, npg, gauss_newton, noisy_pgd };

struct ModelBasedSetup {
  ModelBasedMethod method = ModelBasedMethod::pgd;
  StepSchedule schedule;
  StopCriteria stop;
  double noise_sigma = 0.0;
  SeedSpec seeds;
  std::uint64_t run_id = 0;
  std::optional<OptimalSolution> optimum;
};

inline const char* method_name(ModelBasedMethod m) {
  switch (m) {
    case ModelBasedMethod::pgd: return "mb_pgd";
    case ModelBasedMethod::npg: return "mb_npg";
    case ModelBasedMethod::gauss_newton: return "mb_gauss_newton";
    case ModelBasedMethod::noisy_pgd: return "noisy_pgd";
  }
  return "unknown";
}

inline double model_based_step(const ModelBasedSetup& s, const PlantModel& plant, const PlantNorms& norms,
                               const ClosedLoopQuantities& q, double c_star) {
  switch (s.schedule.kind) {
    case StepKind::fixed: return s.schedule.eta;
    case StepKind::adaptive_empirical: return empirical_step(s.schedule, q.P.trace());
    case StepKind::adaptive_certified:
      if (s.method == ModelBasedMethod::npg) return npg_step_bound(norms, q.cost);
      if (s.method == ModelBasedMethod::gauss_newton) return 0.5;
      return pgd_step_bound(norms, q.cost, std::min(c_star, q.cost));
  }
  (void)plant;
  return 0.0;
}

inline ConvergenceTrace run_model_based(const PlantModel& plant, const Gain& k0, const ModelBasedSetup& s) {
  s.schedule.validate();
  check_gain_shape(plant, k0);
  const ClosedLoop cl0 = closed_loop(plant, k0);
  if (!cl0.stability.is_stabilizing)
    throw DomainError("initial gain is not stabilizing (spectral radius " +
                      std::to_string(cl0.stability.spectral_radius) + ")");
  const OptimalSolution opt = s.optimum ? *s.optimum : solve_dare(plant);
  const PlantNorms norms = plant_norms(plant);
  ConvergenceTrace trace;
  trace.optimizer = method_name(s.method);
  trace.schedule = s.schedule.describe();
  trace.seeds = s.seeds;
  trace.run_id = s.run_id;
  trace.c_star = opt.C_star;
  Gain k = k0;
  double initial_cost = 0.0;
  for (std::size_t i = 0;; ++i) {
    IterationRecord rec;
    rec.i = i;
    const ClosedLoop cl = closed_loop(plant, k);
    if (!cl.stability.is_stabilizing) {
      rec.cost = std::numeric_limits<double>::infinity();
      rec.rel_subopt = rec.cost;
      rec.status = IterationStatus::diverged;
      trace.records.push_back(rec);
      trace.reason = TerminalReason::diverged;
      break;
    }
    const ClosedLoopQuantities q = exact_quantities(plant, k);
    if (i == 0) initial_cost = q.cost;
    rec.cost = q.cost;
    rec.rel_subopt = relative_suboptimality(q.cost, opt.C_star);
    rec.grad_norm = q.grad.norm();
    if (!std::isfinite(q.cost) || q.cost > s.stop.divergence_factor * initial_cost) {
      rec.status = IterationStatus::diverged;
      trace.records.push_back(rec);
      trace.reason = TerminalReason::diverged;
      break;
    }
    if (s.stop.target_rel_subopt && rec.rel_subopt <= *s.stop.target_rel_subopt) {
      trace.records.push_back(rec);
      trace.reason = TerminalReason::target_reached;
      break;
    }
    if (s.method != ModelBasedMethod::noisy_pgd && rec.grad_norm <= s.stop.stationary_tol * std::max(1.0, q.cost)) {
      trace.records.push_back(rec);
      trace.reason = TerminalReason::stationary;
      break;
    }
    if (i >= s.stop.max_iterations) {
      trace.records.push_back(rec);
      trace.reason = TerminalReason::max_iterations;
      break;
    }
    const double eta = model_based_step(s, plant, norms, q, opt.C_star);
    Matrix next;
    switch (s.method) {
      case ModelBasedMethod::pgd:
        next = k.matrix() - eta * q.grad;
        break;
      case ModelBasedMethod::npg:
        next = k.matrix() - 2.0 * eta * q.E;
        break;
      case ModelBasedMethod::gauss_newton: {
        const Matrix& b = plant.b();
        Matrix h = symmetrize(plant.r() + b.transpose() * q.P * b);
        next = k.matrix() - eta * h.ldlt().solve(natural_direction(q.grad, q.Sigma));
        break;
      }
      case ModelBasedMethod::noisy_pgd: {
        Rng rng = s.seeds.stream(StreamLabel{s.run_id, i, 0, 0, StreamPurpose::gradient_noise});
        Matrix delta(q.grad.rows(), q.grad.cols());
        for (Index c = 0; c < delta.cols(); ++c)
          for (Index r = 0; r < delta.rows(); ++r) delta(r, c) = s.noise_sigma * rng.gaussian();
        Matrix noisy = q.grad + delta;
        rec.grad_norm = noisy.norm();
        next = k.matrix() - eta * noisy;
        break;
      }
    }
    rec.step = eta;
    trace.records.push_back(rec);
    k = Gain(std::move(next));
  }
  trace.final_gain = k;
  return trace;
}

}  // namespace detail

inline ConvergenceTrace run_mb_pgd(const PlantModel& plant, const Gain& k0, const StepSchedule& schedule,
                                   const StopCriteria& stop, std::optional<OptimalSolution> optimum = std::nullopt) {
  detail::ModelBasedSetup s;
  s.method = detail::ModelBasedMethod::pgd;
  s.schedule = schedule;
  s.stop = stop;
  s.optimum = std::move(optimum);
  return detail::run_model_based(plant, k0, s);
}

inline ConvergenceTrace run_mb_npg(const PlantModel& plant, const Gain& k0, const StepSchedule& schedule,
                                   const StopCriteria& stop, std::optional<OptimalSolution> optimum = std::nullopt) {
  detail::ModelBasedSetup s;
  s.method = detail::ModelBasedMethod::npg;
  s.schedule = schedule;
  s.stop = stop;
  s.optimum = std::move(optimum);
  return detail::run_model_based(plant, k0, s);
}

inline ConvergenceTrace run_mb_gauss_newton(const PlantModel& plant, const Gain& k0, double eta,
                                            const StopCriteria& stop,
                                            std::optional<OptimalSolution> optimum = std::nullopt) {
  if (!(eta > 0.0 && eta <= 0.5)) throw DomainError("Gauss-Newton step must lie in (0, 1/2]");
  detail::ModelBasedSetup s;
  s.method = detail::ModelBasedMethod::gauss_newton;
  s.schedule = StepSchedule::fixed(eta);
  s.stop = stop;
  s.optimum = std::move(optimum);
  return detail::run_model_based(plant, k0, s);
}

// PGD on exact gradients corrupted by i.i.d. N(0, noise_sigma^2) entries.
inline ConvergenceTrace run_noisy_gradient_pgd(const PlantModel& plant, const Gain& k0, double eta,
                                               double noise_sigma, const StopCriteria& stop, const SeedSpec& seeds,
                                               std::uint64_t run_id = 0,
                                               std::optional<OptimalSolution> optimum = std::nullopt) {
  if (noise_sigma < 0.0) throw DomainError("gradient noise level must be nonnegative");
  detail::ModelBasedSetup s;
  s.method = detail::ModelBasedMethod::noisy_pgd;
  s.schedule = StepSchedule::fixed(eta);
  s.stop = stop;
  s.noise_sigma = noise_sigma;
  s.seeds = seeds;
  s.run_id = run_id;
  s.optimum = std::move(optimum);
  return detail::run_model_based(plant, k0, s);
}

}  // namespace pglqr
