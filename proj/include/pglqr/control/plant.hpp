#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pglqr/core/linalg.hpp"

namespace pglqr {

// State feedback u = K x; K is n_u x n_x.
class Gain {
 public:
  Gain() = default;
  explicit Gain(Matrix k) : k_(std::move(k)) {}

  const Matrix& matrix() const noexcept { return k_; }
  Index inputs() const noexcept { return k_.rows(); }
  Index states() const noexcept { return k_.cols(); }

  Gain operator+(const Matrix& delta) const { return Gain(k_ + delta); }
  Gain operator-(const Matrix& delta) const { return Gain(k_ - delta); }

 private:
  Matrix k_;
};

// Linear plant x+ = A x + B u + w with quadratic weights and Gaussian noise/initial state.
class PlantModel {
 public:
  PlantModel(Matrix a, Matrix b, Matrix q, Matrix r, Matrix sigma_w, Matrix sigma_0)
      : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), r_(std::move(r)),
        sigma_w_(std::move(sigma_w)), sigma_0_(std::move(sigma_0)) {
    validate();
    q_ = symmetrize(q_);
    r_ = symmetrize(r_);
    sigma_w_ = symmetrize(sigma_w_);
    sigma_0_ = symmetrize(sigma_0_);
    noise_factor_ = psd_factor(sigma_w_);
    initial_factor_ = psd_factor(sigma_0_);
  }

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const Matrix& q() const noexcept { return q_; }
  const Matrix& r() const noexcept { return r_; }
  const Matrix& sigma_w() const noexcept { return sigma_w_; }
  const Matrix& sigma_0() const noexcept { return sigma_0_; }
  // F with F F^T = Sigma_w, used to color standard normal draws.
  const Matrix& noise_factor() const noexcept { return noise_factor_; }
  const Matrix& initial_factor() const noexcept { return initial_factor_; }

  Index state_dim() const noexcept { return a_.rows(); }
  Index input_dim() const noexcept { return b_.cols(); }

  PlantModel with_q(Matrix q) const { return {a_, b_, std::move(q), r_, sigma_w_, sigma_0_}; }
  PlantModel with_noise(Matrix sigma_w, Matrix sigma_0) const {
    return {a_, b_, q_, r_, std::move(sigma_w), std::move(sigma_0)};
  }

 private:
  void validate() const {
    std::vector<std::string> issues;
    const Index n = a_.rows();
    if (a_.cols() != n) issues.push_back("A must be square, got " + shape_string(a_));
    if (b_.rows() != n) issues.push_back("B must have " + std::to_string(n) + " rows, got " + shape_string(b_));
    const Index m = b_.cols();
    auto check_square = [&](const Matrix& x, Index dim, const char* name) {
      if (x.rows() != dim || x.cols() != dim) {
        issues.push_back(std::string(name) + " must be " + std::to_string(dim) + "x" +
                         std::to_string(dim) + ", got " + shape_string(x));
        return false;
      }
      if (!x.allFinite()) {
        issues.push_back(std::string(name) + " has non-finite entries");
        return false;
      }
      if (!is_symmetric(x)) {
        issues.push_back(std::string(name) + " is not symmetric");
        return false;
      }
      return true;
    };
    auto check_pd = [&](const Matrix& x, Index dim, const char* name, bool strict) {
      if (!check_square(x, dim, name) || dim == 0) return;
      const double low = min_eigenvalue(x);
      if (strict ? !(low > 0.0) : low < -1e-12 * std::max(1.0, x.norm()))
        issues.push_back(std::string(name) + (strict ? " must be positive definite" : " must be positive semidefinite") +
                         " (smallest eigenvalue " + std::to_string(low) + ")");
    };
    if (!a_.allFinite()) issues.push_back("A has non-finite entries");
    if (!b_.allFinite()) issues.push_back("B has non-finite entries");
    if (n == 0) issues.push_back("state dimension must be positive");
    if (m == 0) issues.push_back("input dimension must be positive");
    check_pd(q_, n, "Q", true);
    check_pd(r_, m, "R", true);
    check_pd(sigma_w_, n, "Sigma_w", true);
    check_pd(sigma_0_, n, "Sigma_0", false);
    if (!issues.empty()) {
      std::string msg = "invalid plant:";
      for (const auto& s : issues) msg += "\n  " + s;
      throw ConfigError(msg);
    }
  }

  Matrix a_, b_, q_, r_, sigma_w_, sigma_0_;
  Matrix noise_factor_, initial_factor_;
};

struct StabilityReport {
  double spectral_radius = 0.0;
  double induced_2_norm = 0.0;
  bool is_stabilizing = false;
};

struct ClosedLoop {
  Matrix a_k;
  StabilityReport stability;
};

inline void check_gain_shape(const PlantModel& plant, const Gain& k) {
  if (k.inputs() != plant.input_dim() || k.states() != plant.state_dim())
    throw ConfigError("gain must be " + std::to_string(plant.input_dim()) + "x" +
                      std::to_string(plant.state_dim()) + ", got " + shape_string(k.matrix()));
}

inline StabilityReport stability_of(const Matrix& a_k) {
  StabilityReport rep;
  if (!a_k.allFinite()) {
    rep.spectral_radius = rep.induced_2_norm = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.spectral_radius = spectral_radius(a_k);
  rep.induced_2_norm = operator_norm(a_k);
  rep.is_stabilizing = rep.spectral_radius < 1.0;
  return rep;
}

inline ClosedLoop closed_loop(const PlantModel& plant, const Gain& k) {
  check_gain_shape(plant, k);
  ClosedLoop out;
  out.a_k = plant.a() + plant.b() * k.matrix();
  out.stability = stability_of(out.a_k);
  return out;
}

inline bool is_stabilizing(const PlantModel& plant, const Gain& k) {
  return closed_loop(plant, k).stability.is_stabilizing;
}

}  // namespace pglqr
