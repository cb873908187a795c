#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pglqr/core/parallel.hpp"
#include "pglqr/harness/config.hpp"

namespace pglqr {

struct RunResult {
  std::uint64_t run_id = 0;
  std::optional<ConvergenceTrace> trace;
  std::optional<std::string> failure;  // exception text when the run could not produce a trace
};

struct MonteCarloResult {
  std::string label;
  std::uint64_t master_seed = 0;
  OptimalSolution optimum;
  std::vector<RunResult> runs;
  double wall_seconds = 0.0;
};

// Model-side knobs shared by every repetition of a model-free config.
inline ModelFreeConfig model_free_setup(const ExperimentConfig& cfg, const OptimalSolution& opt) {
  const PlantModel& plant = cfg.model();
  ModelFreeConfig mf;
  mf.rollouts = cfg.rollouts;
  mf.schedule = cfg.step;
  mf.schedule.c_star = opt.C_star;
  mf.stop = cfg.stop;
  mf.c_star = opt.C_star;
  mf.exact_cost = [plant](const Gain& k) { return cost_or_infinity(plant, k); };
  mf.initial_cost = cost_or_infinity(plant, cfg.initial_gain);
  const double lambda_w = min_eigenvalue(plant.sigma_w());
  mf.covariance_floor = lambda_w > 0.0 ? lambda_w / 2.0 : 1e-8;
  if (cfg.from_bounds) {
    const FromBounds& fb = *cfg.from_bounds;
    CertifiedRollouts cert;
    cert.eps = fb.eps;
    cert.delta = fb.delta;
    cert.sigma = fb.sigma;
    cert.mode = fb.mode;
    cert.norms = plant_norms(plant);
    cert.sigma_star_norm = operator_norm(opt.Sigma_star);
    cert.c_star = 0.0;
    cert.L0 = fb.L0 ? *fb.L0 : default_initial_bound(plant.sigma_0());
    cert.max_rollouts = fb.max_rollouts;
    cert.max_length = fb.max_length;
    mf.certified = cert;
  }
  return mf;
}

inline ConvergenceTrace run_single(const ExperimentConfig& cfg, const OptimalSolution& opt, std::uint64_t run_id) {
  const PlantModel& plant = cfg.model();
  const SeedSpec seeds{cfg.master_seed};
  ConvergenceTrace trace;
  switch (cfg.optimizer) {
    case OptimizerKind::mb_pgd: trace = run_mb_pgd(plant, cfg.initial_gain, cfg.step, cfg.stop, opt); break;
    case OptimizerKind::mb_npg: trace = run_mb_npg(plant, cfg.initial_gain, cfg.step, cfg.stop, opt); break;
    case OptimizerKind::mb_gauss_newton:
      trace = run_mb_gauss_newton(plant, cfg.initial_gain, cfg.step.kind == StepKind::fixed ? cfg.step.eta : 0.5,
                                  cfg.stop, opt);
      break;
    case OptimizerKind::noisy_pgd:
      trace = run_noisy_gradient_pgd(plant, cfg.initial_gain, cfg.step.eta, cfg.gradient_noise_sigma, cfg.stop, seeds,
                                     run_id, opt);
      break;
    case OptimizerKind::mf_pgd:
    case OptimizerKind::mf_npg: {
      PlantRolloutOracle oracle(plant);
      std::unique_ptr<GradientSource> source;
      if (cfg.estimator == EstimatorKind::baseline)
        source = std::make_unique<BaselineGradientSource>(oracle, cfg.baseline_rollouts, seeds, run_id);
      else
        source = std::make_unique<SphereGradientSource>(oracle, seeds, run_id);
      const ModelFreeConfig mf = model_free_setup(cfg, opt);
      trace = cfg.optimizer == OptimizerKind::mf_pgd ? run_mf_pgd(*source, cfg.initial_gain, mf)
                                                     : run_mf_npg(*source, cfg.initial_gain, mf);
      break;
    }
  }
  trace.seeds = seeds;
  trace.run_id = run_id;
  return trace;
}

// Repetition r draws every random number from substreams keyed by run_id = r, so the
// result does not depend on how repetitions are spread over threads.
inline MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg, std::optional<std::size_t> threads = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  MonteCarloResult out;
  out.label = cfg.label;
  out.master_seed = cfg.master_seed;
  out.optimum = solve_dare(cfg.model());
  out.runs.resize(cfg.repetitions);
  parallel_for(cfg.repetitions, threads ? *threads : cfg.threads, [&](std::size_t r) {
    RunResult& slot = out.runs[r];
    slot.run_id = r;
    try {
      slot.trace = run_single(cfg, out.optimum, r);
    } catch (const std::exception& e) {
      slot.failure = e.what();
    }
  });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pglqr
