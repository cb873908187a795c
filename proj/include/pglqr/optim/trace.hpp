#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pglqr/control/plant.hpp"
#include "pglqr/sim/seeding.hpp"

namespace pglqr {

enum class IterationStatus { ok, diverged, estimate_failed };

inline const char* to_string(IterationStatus s) {
  switch (s) {
    case IterationStatus::ok: return "ok";
    case IterationStatus::diverged: return "diverged";
    case IterationStatus::estimate_failed: return "estimate_failed";
  }
  return "unknown";
}

enum class TerminalReason { max_iterations, target_reached, stationary, diverged, estimate_failures };

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::max_iterations: return "max_iterations";
    case TerminalReason::target_reached: return "target_reached";
    case TerminalReason::stationary: return "stationary";
    case TerminalReason::diverged: return "diverged";
    case TerminalReason::estimate_failures: return "estimate_failures";
  }
  return "unknown";
}

// One row per iterate K_i: its cost, the step taken from it, and the gradient norm used.
struct IterationRecord {
  std::size_t i = 0;
  double cost = 0.0;
  double rel_subopt = std::numeric_limits<double>::quiet_NaN();
  double step = 0.0;
  double grad_norm = 0.0;
  IterationStatus status = IterationStatus::ok;
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
  std::string optimizer;
  std::string schedule;
  SeedSpec seeds;
  std::uint64_t run_id = 0;
  TerminalReason reason = TerminalReason::max_iterations;
  Gain final_gain;
  std::optional<double> c_star;

  bool diverged() const { return reason == TerminalReason::diverged; }
  const IterationRecord& last() const { return records.back(); }
};

struct StopCriteria {
  std::size_t max_iterations = 100;
  std::optional<double> target_rel_subopt;
  double divergence_factor = 1e6;  // cost ceiling relative to the initial cost
  double stationary_tol = 1e-10;   // stop once ||grad||_F <= stationary_tol * max(1, cost)
};

inline double relative_suboptimality(double cost, const std::optional<double>& c_star) {
  if (!c_star) return std::numeric_limits<double>::quiet_NaN();
  return (cost - *c_star) / *c_star;
}

}  // namespace pglqr
