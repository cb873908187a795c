#pragma once

#include "pglqr/control/lyapunov.hpp"
#include "pglqr/control/plant.hpp"

namespace pglqr {

struct ClosedLoopQuantities {
  Matrix P;
  Matrix Sigma;
  Matrix E;
  double cost = 0.0;
  Matrix grad;
};

// Q + K^T R K
inline Matrix closed_loop_weight(const PlantModel& plant, const Gain& k) {
  return symmetrize(plant.q() + k.matrix().transpose() * plant.r() * k.matrix());
}

inline ClosedLoopQuantities exact_quantities(const PlantModel& plant, const Gain& k) {
  const ClosedLoop cl = closed_loop(plant, k);
  if (!cl.stability.is_stabilizing)
    throw InstabilityError("gain is not stabilizing", cl.stability.spectral_radius);
  ClosedLoopQuantities out;
  out.P = solve_discrete_lyapunov(cl.a_k.transpose(), closed_loop_weight(plant, k));
  out.Sigma = solve_discrete_lyapunov(cl.a_k, plant.sigma_w());
  const Matrix& b = plant.b();
  out.E = (plant.r() + b.transpose() * out.P * b) * k.matrix() + b.transpose() * out.P * plant.a();
  out.cost = (out.P * plant.sigma_w()).trace();
  out.grad = 2.0 * out.E * out.Sigma;
  return out;
}

// C(K), or +inf when K does not stabilize the plant.
inline double cost_or_infinity(const PlantModel& plant, const Gain& k) {
  const ClosedLoop cl = closed_loop(plant, k);
  if (!cl.stability.is_stabilizing) return std::numeric_limits<double>::infinity();
  const Matrix p = solve_discrete_lyapunov(cl.a_k.transpose(), closed_loop_weight(plant, k));
  return (p * plant.sigma_w()).trace();
}

struct FiniteHorizonQuantities {
  Matrix Sigma_l;
  double C_l = 0.0;
};

// Expected average covariance and cost over the first l states started from Sigma_0.
inline FiniteHorizonQuantities finite_horizon_quantities(const PlantModel& plant, const Gain& k, std::size_t l) {
  if (l == 0) throw DomainError("horizon must be at least 1");
  const ClosedLoop cl = closed_loop(plant, k);
  if (!cl.stability.is_stabilizing)
    throw InstabilityError("gain is not stabilizing", cl.stability.spectral_radius);
  Matrix sigma_t = plant.sigma_0();
  Matrix sum = Matrix::Zero(sigma_t.rows(), sigma_t.cols());
  for (std::size_t t = 0; t < l; ++t) {
    sum += sigma_t;
    sigma_t = cl.a_k * sigma_t * cl.a_k.transpose() + plant.sigma_w();
  }
  FiniteHorizonQuantities out;
  out.Sigma_l = symmetrize(sum / static_cast<double>(l));
  out.C_l = (closed_loop_weight(plant, k) * out.Sigma_l).trace();
  return out;
}

}  // namespace pglqr
