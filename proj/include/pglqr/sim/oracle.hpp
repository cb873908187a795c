#pragma once

#include <functional>
#include <memory>

#include "pglqr/sim/rollout.hpp"

namespace pglqr {

// Black-box access to a closed-loop system. Nothing here exposes the dynamics or
// the noise covariance; estimators only see trajectories and stage costs.
class RolloutOracle {
 public:
  virtual ~RolloutOracle() = default;

  virtual Index state_dim() const = 0;
  virtual Index input_dim() const = 0;
  virtual InitialState sample_initial_state(double L0, Rng& rng) const = 0;
  virtual SimulationOutcome rollout(const Gain& k, const Vector& x0, std::size_t l, Rng& noise,
                                    const StreamLabel& label) const = 0;
  // Average stage cost along the trajectory under traj.gain_used.
  virtual double stage_cost(const Trajectory& traj) const = 0;
};

using StageCostEvaluator = std::function<double(const Trajectory&)>;

inline StageCostEvaluator quadratic_stage_cost(Matrix q, Matrix r) {
  return [q = std::move(q), r = std::move(r)](const Trajectory& traj) {
    return empirical_cost(traj, q, r, traj.gain_used);
  };
}

// Simulator-backed oracle. The plant is held privately.
class PlantRolloutOracle final : public RolloutOracle {
 public:
  explicit PlantRolloutOracle(PlantModel plant, StageCostEvaluator cost = {})
      : plant_(std::move(plant)),
        cost_(cost ? std::move(cost) : quadratic_stage_cost(plant_.q(), plant_.r())) {}

  Index state_dim() const override { return plant_.state_dim(); }
  Index input_dim() const override { return plant_.input_dim(); }

  InitialState sample_initial_state(double L0, Rng& rng) const override {
    return sample_initial_state_factored(plant_.initial_factor(), L0, rng);
  }

  SimulationOutcome rollout(const Gain& k, const Vector& x0, std::size_t l, Rng& noise,
                            const StreamLabel& label) const override {
    return simulate(plant_, k, x0, l, noise, label);
  }

  double stage_cost(const Trajectory& traj) const override { return cost_(traj); }

 private:
  PlantModel plant_;
  StageCostEvaluator cost_;
};

}  // namespace pglqr
