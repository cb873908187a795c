#pragma once

#include "pglqr/control/exact.hpp"

namespace pglqr {

struct OptimalSolution {
  Gain K_star;
  Matrix P_star;
  Matrix Sigma_star;
  double C_star = 0.0;
  std::size_t iterations = 0;
};

struct DareOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 100000;
};

inline Matrix riccati_gain(const PlantModel& plant, const Matrix& p) {
  const Matrix& b = plant.b();
  Matrix h = symmetrize(plant.r() + b.transpose() * p * b);
  return -h.ldlt().solve(b.transpose() * p * plant.a());
}

// Value iteration on the Riccati map from P = Q.
inline OptimalSolution solve_dare(const PlantModel& plant, const DareOptions& opt = {}) {
  const Matrix& a = plant.a();
  const Matrix& b = plant.b();
  Matrix p = plant.q();
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (; it < opt.max_iterations; ++it) {
    Matrix h = symmetrize(plant.r() + b.transpose() * p * b);
    Matrix bpa = b.transpose() * p * a;
    Matrix next = symmetrize(plant.q() + a.transpose() * p * a - bpa.transpose() * h.ldlt().solve(bpa));
    if (!next.allFinite()) throw NumericError("Riccati iteration produced non-finite values");
    residual = (next - p).norm();
    const double scale = p.norm();
    p = std::move(next);
    if (residual <= opt.tolerance * scale) break;
  }
  if (it == opt.max_iterations)
    throw NonConvergenceError("Riccati iteration did not converge", residual, opt.max_iterations);
  OptimalSolution sol;
  sol.P_star = p;
  sol.K_star = Gain(riccati_gain(plant, p));
  sol.Sigma_star = solve_discrete_lyapunov(a + b * sol.K_star.matrix(), plant.sigma_w());
  sol.C_star = (p * plant.sigma_w()).trace();
  sol.iterations = it + 1;
  return sol;
}

// Gradient-domination constant: C(K) - C* <= mu ||grad C(K)||_F^2.
inline double gradient_domination_mu(const PlantModel& plant, const OptimalSolution& opt) {
  Matrix w_inv = plant.sigma_w().inverse();
  return 0.25 * operator_norm(opt.Sigma_star) * operator_norm(w_inv * w_inv) *
         operator_norm(plant.r().inverse());
}

inline double gradient_domination_mu(const PlantModel& plant) {
  return gradient_domination_mu(plant, solve_dare(plant));
}

}  // namespace pglqr
