#pragma once

#include "pglqr/core/linalg.hpp"

namespace pglqr {

struct LyapunovOptions {
  Index direct_max_dim = 32;
  double tolerance = 1e-12;
  std::size_t max_iterations = 200;  // doubling steps; each squares the transition
};

namespace detail {

inline Matrix lyapunov_residual(const Matrix& m, const Matrix& w, const Matrix& x) {
  return x - m * x * m.transpose() - w;
}

inline Matrix lyapunov_direct(const Matrix& m, const Matrix& w) {
  const Index n = m.rows();
  const Index nn = n * n;
  Matrix system = Matrix::Identity(nn, nn) - kronecker(m, m);
  Eigen::PartialPivLU<Matrix> lu(system);
  Vector rhs = Eigen::Map<const Vector>(w.data(), nn);
  Vector sol = lu.solve(rhs);
  Matrix x = Eigen::Map<Matrix>(sol.data(), n, n);
  // one step of iterative refinement
  Matrix res = w - lyapunov_residual(m, Matrix::Zero(n, n), x);
  Vector corr = lu.solve(Eigen::Map<const Vector>(res.data(), nn));
  x += Eigen::Map<Matrix>(corr.data(), n, n);
  return x;
}

// Doubling (Smith) iteration: X_{j+1} = X_j + M_j X_j M_j^T, M_{j+1} = M_j^2.
inline Matrix lyapunov_iterative(const Matrix& m, const Matrix& w, const LyapunovOptions& opt) {
  Matrix x = w;
  Matrix mk = m;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    Matrix delta = mk * x * mk.transpose();
    x += delta;
    mk = mk * mk;
    if (delta.norm() <= opt.tolerance * std::max(1.0, x.norm())) return x;
    if (!x.allFinite()) break;
  }
  throw NonConvergenceError("Lyapunov iteration did not converge",
                            lyapunov_residual(m, w, x).norm(), opt.max_iterations);
}

}  // namespace detail

// Solves X = M X M^T + W for Schur-stable M.
inline Matrix solve_discrete_lyapunov(const Matrix& m, const Matrix& w, const LyapunovOptions& opt = {}) {
  if (m.rows() != m.cols() || w.rows() != m.rows() || w.cols() != m.cols())
    throw ConfigError("Lyapunov operands must be square of equal size, got " + shape_string(m) + " and " +
                      shape_string(w));
  if (!m.allFinite() || !w.allFinite()) throw NumericError("Lyapunov operands contain non-finite entries");
  const double rho = spectral_radius(m);
  if (!(rho < 1.0)) throw InstabilityError("Lyapunov transition is not Schur stable", rho);
  Matrix x = m.rows() <= opt.direct_max_dim ? detail::lyapunov_direct(m, w)
                                            : detail::lyapunov_iterative(m, w, opt);
  x = symmetrize(x);
  if (!x.allFinite()) throw NumericError("Lyapunov solution is not finite");
  return x;
}

}  // namespace pglqr
