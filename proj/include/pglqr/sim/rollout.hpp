#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "pglqr/control/plant.hpp"
#include "pglqr/sim/seeding.hpp"

namespace pglqr {

struct RolloutConfig {
  std::size_t n = 1;
  std::size_t l = 1;
  double r = 1.0;
  double L0 = 1.0;

  void validate() const {
    std::string msg;
    if (n < 1) msg += " n must be >= 1;";
    if (l < 1) msg += " l must be >= 1;";
    if (!(r > 0.0) || !std::isfinite(r)) msg += " r must be positive;";
    if (!(L0 > 0.0) || !std::isfinite(L0)) msg += " L0 must be positive;";
    if (!msg.empty()) throw ConfigError("invalid rollout config:" + msg);
  }
};

// 3 sqrt(Tr Sigma_0), or 1 when Sigma_0 vanishes.
inline double default_initial_bound(const Matrix& sigma_0) {
  const double tr = sigma_0.trace();
  return tr > 0.0 ? 3.0 * std::sqrt(tr) : 1.0;
}

struct Trajectory {
  Matrix states;  // n_x x l, column t is x_t
  Gain gain_used;
  StreamLabel label;

  std::size_t length() const { return static_cast<std::size_t>(states.cols()); }
  auto state(std::size_t t) const { return states.col(static_cast<Index>(t)); }
};

// A rollout whose state stopped being finite at `step`.
struct RolloutOverflow {
  std::size_t step = 0;
  StreamLabel label;
};

using SimulationOutcome = std::variant<Trajectory, RolloutOverflow>;

struct InitialState {
  Vector x0;
  std::uint64_t rejections = 0;
};

inline Matrix sample_sphere_perturbation(Index n_u, Index n_x, double r, Rng& rng) {
  if (!(r > 0.0)) throw ConfigError("perturbation radius must be positive");
  Matrix u(n_u, n_x);
  double norm = 0.0;
  do {
    for (Index j = 0; j < n_x; ++j)
      for (Index i = 0; i < n_u; ++i) u(i, j) = rng.gaussian();
    norm = u.norm();
  } while (norm == 0.0);
  return (r / norm) * u;
}

inline Matrix sample_sphere_perturbation(Index n_u, Index n_x, double r, const SeedSpec& seeds,
                                         const StreamLabel& label) {
  Rng rng = seeds.stream(label);
  return sample_sphere_perturbation(n_u, n_x, r, rng);
}

inline constexpr std::uint64_t kMaxInitialStateRejections = 1000000;

// Draws from N(0, F F^T) conditioned on ||x0|| <= L0 by rejection.
inline InitialState sample_initial_state_factored(const Matrix& factor, double L0, Rng& rng) {
  if (!(L0 > 0.0)) throw ConfigError("initial state bound must be positive");
  const Index n = factor.rows();
  InitialState out;
  Vector z(n);
  for (;;) {
    for (Index i = 0; i < n; ++i) z(i) = rng.gaussian();
    out.x0 = factor * z;
    if (out.x0.norm() <= L0) return out;
    if (++out.rejections >= kMaxInitialStateRejections)
      throw ConfigError("initial state acceptance probability below 1e-6 for L0 = " + std::to_string(L0));
  }
}

inline InitialState sample_initial_state(const Matrix& sigma_0, double L0, Rng& rng) {
  return sample_initial_state_factored(psd_factor(sigma_0), L0, rng);
}

// l states x_0..x_{l-1}; l-1 noise draws. Colors standard normals with noise_factor.
inline SimulationOutcome simulate_closed_loop(const Matrix& a_k, const Matrix& noise_factor, const Gain& k,
                                              const Vector& x0, std::size_t l, Rng& noise,
                                              const StreamLabel& label = {}) {
  if (l < 1) throw DomainError("rollout length must be at least 1");
  const Index n = a_k.rows();
  Trajectory traj;
  traj.states.resize(n, static_cast<Index>(l));
  traj.states.col(0) = x0;
  traj.gain_used = k;
  traj.label = label;
  // plain loops: Eigen's product dispatch dominates at the 2-4 state sizes simulated here
  std::vector<double> z(static_cast<std::size_t>(n));
  const double* am = a_k.data();
  const double* fm = noise_factor.data();
  double* xs = traj.states.data();
  for (std::size_t t = 1; t < l; ++t) {
    for (Index i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = noise.gaussian();
    const double* prev = xs + (t - 1) * static_cast<std::size_t>(n);
    double* next = xs + t * static_cast<std::size_t>(n);
    double norm2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      double v = 0.0;
      for (Index j = 0; j < n; ++j) v += am[i + j * n] * prev[j] + fm[i + j * n] * z[static_cast<std::size_t>(j)];
      next[i] = v;
      norm2 += v * v;
    }
    if (!std::isfinite(norm2)) return RolloutOverflow{t, label};
  }
  return traj;
}

inline SimulationOutcome simulate(const PlantModel& plant, const Gain& k, const Vector& x0, std::size_t l,
                                  Rng& noise, const StreamLabel& label = {}) {
  check_gain_shape(plant, k);
  if (x0.size() != plant.state_dim()) throw ConfigError("initial state has wrong dimension");
  return simulate_closed_loop(plant.a() + plant.b() * k.matrix(), plant.noise_factor(), k, x0, l, noise, label);
}

inline SimulationOutcome simulate(const PlantModel& plant, const Gain& k, const Vector& x0, std::size_t l,
                                  const SeedSpec& seeds, const StreamLabel& label) {
  Rng rng = seeds.stream(label);
  return simulate(plant, k, x0, l, rng, label);
}

// (1/l) sum_t x_t^T (Q + K^T R K) x_t
inline double empirical_cost(const Trajectory& traj, const Matrix& q, const Matrix& r, const Gain& k) {
  const Matrix weight = q + k.matrix().transpose() * r * k.matrix();
  const Matrix& x = traj.states;
  const Matrix second_moment = x * x.transpose();
  return weight.cwiseProduct(second_moment).sum() / static_cast<double>(x.cols());
}

inline Matrix empirical_covariance(const Trajectory& traj) {
  const Matrix& x = traj.states;
  return symmetrize(x * x.transpose() / static_cast<double>(x.cols()));
}

}  // namespace pglqr
