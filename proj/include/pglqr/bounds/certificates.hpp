#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "pglqr/control/plant.hpp"

namespace pglqr {

// Plant summaries the closed-form bounds consume. lambda_* are smallest eigenvalues,
// norm_* are induced 2-norms.
struct PlantNorms {
  Index n_x = 0;
  Index n_u = 0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  double norm_r = 0.0;
  double lambda_q = 0.0;
  double lambda_r = 0.0;
  double lambda_w = 0.0;
  double trace_w = 0.0;
  double norm_w = 0.0;
  double lambda_0 = 0.0;
  double norm_0 = 0.0;
};

inline PlantNorms plant_norms(const PlantModel& p) {
  PlantNorms n;
  n.n_x = p.state_dim();
  n.n_u = p.input_dim();
  n.norm_a = operator_norm(p.a());
  n.norm_b = operator_norm(p.b());
  n.norm_r = operator_norm(p.r());
  n.lambda_q = min_eigenvalue(p.q());
  n.lambda_r = min_eigenvalue(p.r());
  n.lambda_w = min_eigenvalue(p.sigma_w());
  n.trace_w = p.sigma_w().trace();
  n.norm_w = operator_norm(p.sigma_w());
  n.lambda_0 = std::max(0.0, min_eigenvalue(p.sigma_0()));
  n.norm_0 = operator_norm(p.sigma_0());
  return n;
}

enum class StateBoundMode { linear, chebyshev };

inline const char* to_string(StateBoundMode m) { return m == StateBoundMode::linear ? "linear" : "chebyshev"; }

struct BoundOptions {
  double c_star = 0.0;                     // C(K*); 0 is the conservative model-free default
  std::optional<double> gain_norm;         // actual ||K|| when known, else b_K(c) is used
  std::optional<double> radius;            // radius to certify at; defaults to r_max
  StateBoundMode state_mode = StateBoundMode::linear;
  bool self_consistent_cbar = false;       // sample cost ceiling from the state bound at t = l-1
  bool alpha3_noise_floor = false;         // use lambda_1(Sigma_w) in alpha_3 instead of lambda_1(Sigma_0)
};

struct PerturbationConstants {
  double c = 0.0;
  double c_star = 0.0;
  double h = 0.0;
  double h_sigma = 0.0;
  double h_cost = 0.0;
  double h_grad = 0.0;
  double b_gain = 0.0;
  double b_grad = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
};

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
}

inline void require_probability(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0,1)");
}

// ||R|| + ||B||^2 c / lambda_1(Sigma_w), the recurring bound on ||R + B^T P B||
inline double curvature_bound(const PlantNorms& n, double c) {
  return n.norm_r + n.norm_b * n.norm_b * c / n.lambda_w;
}

// 1 - (1 - delta)^(1/t), accurate for small delta and large t
inline double per_step_tail(double delta, double t) { return -std::expm1(std::log1p(-delta) / t); }

inline double ceil_count(double raw) { return std::isfinite(raw) ? std::max(1.0, std::ceil(raw)) : raw; }

}  // namespace detail

inline PerturbationConstants perturbation_constants(const PlantNorms& n, double c, const BoundOptions& opt = {}) {
  detail::require_positive(c, "cost value");
  if (opt.c_star < 0.0 || opt.c_star > c) throw DomainError("c_star must lie in [0, c]");
  PerturbationConstants k;
  k.c = c;
  k.c_star = opt.c_star;
  const double gap = c - opt.c_star;
  const double curv = detail::curvature_bound(n, c);
  k.h = n.lambda_w * n.lambda_q / (8.0 * c * n.norm_b);
  k.h_sigma = 8.0 * std::pow(c / n.lambda_q, 2) * n.norm_b / n.lambda_w;
  k.b_gain = (std::sqrt(gap * curv / n.lambda_w) + n.norm_b * n.norm_a * c / n.lambda_w) / n.lambda_r;
  k.alpha2 = 6.0 * std::pow(c / (n.lambda_w * n.lambda_q), 2) *
             (2.0 * k.b_gain * k.b_gain * n.norm_r * n.norm_b + k.b_gain * n.norm_r);
  k.h_cost = k.alpha2 * n.trace_w;
  k.b_grad = std::sqrt(4.0 * std::pow(c / n.lambda_q, 2) * (gap / n.lambda_w) * curv);
  k.alpha1 = 2.0 * std::sqrt((gap / n.lambda_w) * curv) * k.h_sigma;
  const double floor = opt.alpha3_noise_floor ? n.lambda_w : n.lambda_0;
  if (!(floor > 0.0))
    throw DomainError("alpha_3 needs lambda_1(Sigma_0) > 0; set alpha3_noise_floor to use lambda_1(Sigma_w)");
  k.alpha3 = n.norm_r + n.norm_b * n.norm_b * c / floor + k.alpha2 * (n.norm_b * n.norm_a + k.b_gain * n.norm_b * n.norm_b);
  k.h_grad = k.alpha1 + k.alpha3;
  return k;
}

inline double pgd_step_bound(const PlantNorms& n, double c, double c_star = 0.0) {
  BoundOptions opt;
  opt.c_star = c_star;
  opt.alpha3_noise_floor = true;  // alpha_3 is not needed here
  const PerturbationConstants k = perturbation_constants(n, c, opt);
  const double first = std::pow(n.lambda_q * n.lambda_w / c, 2) / (2.0 * n.norm_b * k.b_grad);
  const double second = n.lambda_q / (2.0 * c * detail::curvature_bound(n, c));
  return std::min(first, second) / 32.0;
}

inline double npg_step_bound(const PlantNorms& n, double c) {
  detail::require_positive(c, "cost value");
  return 1.0 / (2.0 * n.norm_r + 2.0 * n.norm_b * n.norm_b * c / n.lambda_w);
}

// Noise magnitude exceeded at a single step with probability 1 - (1 - delta_x)^(1/t).
inline double noise_ceiling(double trace_w, double delta_x, double t, StateBoundMode mode) {
  const double tail = detail::per_step_tail(delta_x, t);
  return mode == StateBoundMode::linear ? trace_w / tail : std::sqrt(trace_w / tail);
}

inline double state_bound(double L0, double t, double trace_w, double delta_x,
                          StateBoundMode mode = StateBoundMode::linear) {
  detail::require_probability(delta_x, "delta_x");
  if (!(t >= 1.0)) throw DomainError("state bound horizon must be at least 1");
  if (L0 < 0.0) throw DomainError("L0 must be nonnegative");
  return L0 + t * noise_ceiling(trace_w, delta_x, t, mode);
}

// Finite-horizon length guaranteeing |C^(l) - C| <= eps (cost form) or ||Sigma^(l) - Sigma_K|| <= eps.
inline double finite_horizon_length_cost(const PlantNorms& n, double c, double eps) {
  detail::require_positive(eps, "accuracy");
  const double lq = n.lambda_q, lw = n.lambda_w;
  return 2.0 * c / (eps * lw) * (c * n.norm_0 / (lq * lw) + c * c / (lq * lw * lw) + c / lq);
}

inline double finite_horizon_length_covariance(const PlantNorms& n, double c, double eps) {
  detail::require_positive(eps, "accuracy");
  const double lq = n.lambda_q, lw = n.lambda_w;
  return 2.0 * c / eps * (n.norm_0 / (lq * lw) + c / (lq * lw * lw) + 1.0 / lq);
}

struct ErrorBudget {
  double eps_d = 0.0, eps_l = 0.0, eps_n = 0.0, eps_r = 0.0;
  double delta_x = 0.0, delta_n = 0.0, delta_d = 0.0;

  double eps() const { return eps_d + eps_l + eps_n + eps_r; }
  double delta() const { return 1.0 - (1.0 - delta_d) * (1.0 - delta_n) * (1.0 - delta_x); }

  void validate() const {
    detail::require_positive(eps_d, "eps_d");
    detail::require_positive(eps_l, "eps_l");
    detail::require_positive(eps_n, "eps_n");
    detail::require_positive(eps_r, "eps_r");
    detail::require_probability(delta_x, "delta_x");
    detail::require_probability(delta_n, "delta_n");
    detail::require_probability(delta_d, "delta_d");
  }

  // Equal split of eps over four parts and of delta over three factors.
  static ErrorBudget split(double eps, double delta) {
    detail::require_positive(eps, "eps");
    detail::require_probability(delta, "delta");
    const double part = detail::per_step_tail(delta, 3.0);
    return {eps / 4, eps / 4, eps / 4, eps / 4, part, part, part};
  }
};

struct CovErrorBudget {
  double eps_l = 0.0, eps_n = 0.0, eps_r = 0.0;
  double delta_n = 0.0, delta_x = 0.0;

  double eps() const { return eps_l + eps_n + eps_r; }
  double delta() const { return 1.0 - (1.0 - delta_n) * (1.0 - delta_x); }

  void validate() const {
    detail::require_positive(eps_l, "eps_l");
    detail::require_positive(eps_n, "eps_n");
    detail::require_positive(eps_r, "eps_r");
    detail::require_probability(delta_n, "delta_n");
    detail::require_probability(delta_x, "delta_x");
  }

  static CovErrorBudget split(double eps, double delta) {
    detail::require_positive(eps, "eps");
    detail::require_probability(delta, "delta");
    const double part = detail::per_step_tail(delta, 2.0);
    return {eps / 3, eps / 3, eps / 3, part, part};
  }
};

struct GradientCertificate {
  double r_max = 0.0;
  double r_trust = 0.0, r_gain = 0.0, r_accuracy = 0.0;  // the three branches of the min
  double r_used = 0.0;
  double c_perturbed = 0.0;  // c + r h_C(c)
  double l_min_raw = 0.0, l_min = 0.0;
  double alpha4 = 0.0, alpha5 = 0.0, alpha6 = 0.0, alpha7 = 0.0, alpha8 = 0.0;
  double c_bar = 0.0;
  double N1_raw = 0.0, N1 = 0.0;
  double N2_raw = 0.0, N2 = 0.0;
  double n_required() const { return std::max(N1, N2); }
};

struct CovarianceCertificate {
  double r_max = 0.0;
  double r_trust = 0.0, r_gain = 0.0, r_accuracy = 0.0;
  double r_used = 0.0;
  double c_perturbed = 0.0;
  double l_min_raw = 0.0, l_min = 0.0;
  double state_bound = 0.0;  // L-bar'
  double alpha9 = 0.0, alpha10 = 0.0;
  double n_min_raw = 0.0, n_min = 0.0;
};

struct VrBudget {
  double delta_x_tilde = 0.05;
  double delta_v_tilde = 0.05;
  std::optional<double> eps_v;  // default min{b_s, C-bar - b_s}
};

struct VrCertificate {
  double b_s = 0.0, b_hat = 0.0;
  double c_bar = 0.0;
  double alpha7 = 0.0, alpha11 = 0.0, alpha12 = 0.0;
  double N2_raw = 0.0, N2 = 0.0;
  double N3_raw = 0.0, N3 = 0.0;
  double c_bar_v = 0.0, c_bar_e_v = 0.0;
  double eps_v = 0.0;
  double n_tilde_raw = 0.0, n_tilde = 0.0;
  bool reduces_rollouts() const { return N3 <= N2; }
};

struct SampleCertificate {
  PerturbationConstants constants;
  std::optional<GradientCertificate> gradient;
  std::optional<CovarianceCertificate> covariance;
  std::optional<VrCertificate> variance_reduction;
};

namespace detail {

// (2 m / eps^2)(first + second eps / (3 sqrt m)) log(log_arg)
inline double matrix_bernstein(double dim_factor, double eps, double first, double second, double log_arg) {
  return 2.0 * dim_factor / (eps * eps) * (first + second * eps / (3.0 * std::sqrt(dim_factor))) * std::log(log_arg);
}

// Ceiling on a single rollout cost with probability 1 - delta_x.
inline double sample_cost_ceiling(const PlantNorms& n, double cost, double L0, std::size_t l, double delta_x,
                                  const BoundOptions& opt) {
  double reach;
  if (opt.self_consistent_cbar) {
    reach = l > 1 ? state_bound(L0, static_cast<double>(l - 1), n.trace_w, delta_x, opt.state_mode) : L0;
  } else {
    reach = L0 + static_cast<double>(l - 1) * noise_ceiling(n.trace_w, delta_x, static_cast<double>(l), opt.state_mode);
  }
  return cost / n.lambda_w * reach * reach;
}

}  // namespace detail

inline GradientCertificate gradient_certificate(const PlantNorms& n, double c, const ErrorBudget& budget, double L0,
                                                const BoundOptions& opt = {},
                                                std::optional<PerturbationConstants> constants = std::nullopt) {
  budget.validate();
  if (L0 < 0.0) throw DomainError("L0 must be nonnegative");
  const PerturbationConstants k = constants ? *constants : perturbation_constants(n, c, opt);
  GradientCertificate g;
  g.r_trust = k.h;
  g.r_gain = opt.gain_norm ? *opt.gain_norm : k.b_gain;
  g.r_accuracy = budget.eps_r / k.h_grad;
  g.r_max = std::min({g.r_trust, g.r_gain, g.r_accuracy});
  g.r_used = opt.radius ? std::min(*opt.radius, g.r_max) : g.r_max;
  const double r = g.r_used;
  detail::require_positive(r, "exploration radius");
  const double dim = static_cast<double>(n.n_x * n.n_u);
  const double cp = c + r * k.h_cost;
  g.c_perturbed = cp;
  const double lq = n.lambda_q, lw = n.lambda_w;
  g.l_min_raw = 2.0 * dim * cp * cp / (budget.eps_l * r * lw) * ((n.norm_0 * lw + cp) / (lq * lw * lw) + 1.0 / lq);
  g.l_min = detail::ceil_count(g.l_min_raw);
  const double m = static_cast<double>(std::min(n.n_x, n.n_u));
  const double big = static_cast<double>(std::max(n.n_x, n.n_u));
  const double log_arg = static_cast<double>(n.n_x + n.n_u);
  g.alpha4 = dim * cp / r + budget.eps_r + k.b_grad;
  g.alpha5 = big * big * std::pow(dim * cp / r, 2) + std::pow(budget.eps_r + k.b_grad, 2);
  g.N1_raw = detail::matrix_bernstein(m, budget.eps_n, g.alpha4 * g.alpha4, g.alpha5, log_arg / budget.delta_n);
  g.N1 = detail::ceil_count(g.N1_raw);
  const std::size_t l = static_cast<std::size_t>(std::max(1.0, g.l_min));
  g.c_bar = detail::sample_cost_ceiling(n, cp, L0, l, budget.delta_x, opt);
  const double eps_nr = budget.eps_n + budget.eps_r;
  g.alpha6 = dim * g.c_bar / r;
  g.alpha7 = budget.eps_l + eps_nr + k.b_grad + g.alpha6;
  g.alpha8 = big * big * g.alpha6 * g.alpha6 + std::pow(budget.eps_l + eps_nr + k.b_grad, 2);
  g.N2_raw = detail::matrix_bernstein(m, budget.eps_d, g.alpha7 * g.alpha7, g.alpha8, log_arg / budget.delta_d);
  g.N2 = detail::ceil_count(g.N2_raw);
  return g;
}

inline CovarianceCertificate covariance_certificate(const PlantNorms& n, double c, const CovErrorBudget& budget,
                                                    double L0, const BoundOptions& opt = {},
                                                    std::optional<PerturbationConstants> constants = std::nullopt) {
  budget.validate();
  if (L0 < 0.0) throw DomainError("L0 must be nonnegative");
  const PerturbationConstants k = constants ? *constants : perturbation_constants(n, c, opt);
  CovarianceCertificate v;
  v.r_trust = k.h;
  v.r_gain = opt.gain_norm ? *opt.gain_norm : k.b_gain;
  v.r_accuracy = budget.eps_r / k.b_grad;
  v.r_max = std::min({v.r_trust, v.r_gain, v.r_accuracy});
  v.r_used = opt.radius ? std::min(*opt.radius, v.r_max) : v.r_max;
  detail::require_positive(v.r_used, "exploration radius");
  v.c_perturbed = c + v.r_used * k.h_cost;
  v.l_min_raw = finite_horizon_length_cost(n, c, budget.eps_l);
  v.l_min = detail::ceil_count(v.l_min_raw);
  const double t = opt.self_consistent_cbar ? std::max(1.0, v.l_min - 1.0) : v.l_min;
  v.state_bound = state_bound(L0, t, n.trace_w, budget.delta_x, opt.state_mode);
  const double ratio = v.c_perturbed / n.lambda_q;
  const double nx = static_cast<double>(n.n_x);
  v.alpha9 = ratio + v.state_bound * v.state_bound;
  v.alpha10 = nx * nx * (v.state_bound * v.state_bound + ratio * ratio);
  v.n_min_raw = detail::matrix_bernstein(nx, budget.eps_n, v.alpha10, v.alpha9, 2.0 * nx / budget.delta_n);
  v.n_min = detail::ceil_count(v.n_min_raw);
  return v;
}

// Default bound on the baseline value, (c / lambda_1(Sigma_w))(L0 + (l-1)||Sigma_w||)^2.
inline double default_baseline_bound(const PlantNorms& n, double c, double L0, std::size_t l) {
  const double reach = L0 + static_cast<double>(l - 1) * n.norm_w;
  return c / n.lambda_w * reach * reach;
}

inline VrCertificate vr_certificate(const PlantNorms& n, double c, const ErrorBudget& budget, double b_hat,
                                    double b_s_bound, double L0, std::optional<std::size_t> l_override = std::nullopt,
                                    const VrBudget& vr = {}, const BoundOptions& opt = {}) {
  budget.validate();
  detail::require_probability(vr.delta_x_tilde, "delta_x_tilde");
  detail::require_probability(vr.delta_v_tilde, "delta_v_tilde");
  if (b_hat < 0.0 || b_s_bound < 0.0) throw DomainError("baseline values must be nonnegative");
  GradientCertificate g = gradient_certificate(n, c, budget, L0, opt);
  const std::size_t l = l_override ? *l_override : static_cast<std::size_t>(g.l_min);
  if (l < 1) throw DomainError("rollout length must be at least 1");
  const double r = g.r_used;
  const double dim = static_cast<double>(n.n_x * n.n_u);
  const double m = static_cast<double>(std::min(n.n_x, n.n_u));
  const double big = static_cast<double>(std::max(n.n_x, n.n_u));
  const double log_arg = static_cast<double>(n.n_x + n.n_u) / budget.delta_d;
  const double eps_nr = budget.eps_n + budget.eps_r;
  VrCertificate v;
  v.b_s = b_s_bound;
  v.b_hat = b_hat;
  v.c_bar = detail::sample_cost_ceiling(n, g.c_perturbed, L0, l, budget.delta_x, opt);
  const double alpha6 = dim * v.c_bar / r;
  const PerturbationConstants k = perturbation_constants(n, c, opt);
  v.alpha7 = budget.eps_l + eps_nr + k.b_grad + alpha6;
  const double alpha8 = big * big * alpha6 * alpha6 + std::pow(budget.eps_l + eps_nr + k.b_grad, 2);
  v.N2_raw = detail::matrix_bernstein(m, budget.eps_d, v.alpha7 * v.alpha7, alpha8, log_arg);
  v.N2 = detail::ceil_count(v.N2_raw);
  v.alpha12 = dim / r * (std::max(v.c_bar - b_s_bound, b_s_bound) + std::abs(b_s_bound - b_hat));
  v.alpha11 = big * big * v.alpha12 * v.alpha12 + std::pow(budget.eps_l + eps_nr + k.b_grad, 2);
  v.N3_raw = detail::matrix_bernstein(m, budget.eps_d, v.alpha7 * v.alpha7, v.alpha11, log_arg);
  v.N3 = detail::ceil_count(v.N3_raw);
  const double reach_v =
      L0 + static_cast<double>(l - 1) * noise_ceiling(n.trace_w, vr.delta_x_tilde, static_cast<double>(l), opt.state_mode);
  v.c_bar_v = c / n.lambda_w * reach_v * reach_v;
  const double reach_e = L0 + static_cast<double>(l - 1) * n.norm_w;
  v.c_bar_e_v = c / n.lambda_w * reach_e * reach_e;
  v.eps_v = vr.eps_v ? *vr.eps_v : std::min(b_s_bound, v.c_bar - b_s_bound);
  detail::require_positive(v.eps_v, "eps_v");
  v.n_tilde_raw = 2.0 / (v.eps_v * v.eps_v) *
                  (std::pow(v.c_bar_e_v + v.c_bar_v, 2) +
                   (v.c_bar_e_v * v.c_bar_e_v + v.c_bar_v * v.c_bar_v) * v.eps_v / 3.0) *
                  std::log(2.0 / vr.delta_v_tilde);
  v.n_tilde = detail::ceil_count(v.n_tilde_raw);
  return v;
}

struct RequiredAccuracies {
  double eps_pgd = 0.0;           // proof form, h_grad and factor 2
  double eps_pgd_statement = 0.0; // theorem statement form, h_cost and no factor 2
  double eps_npg_grad = 0.0;
  double eps_npg_cov = 0.0;
};

inline RequiredAccuracies required_accuracies(const PlantNorms& n, double c, double sigma_star_norm, double eps,
                                              double sigma, const BoundOptions& opt = {}) {
  detail::require_probability(sigma, "sigma");
  detail::require_positive(eps, "eps");
  detail::require_positive(sigma_star_norm, "||Sigma_K*||");
  const PerturbationConstants k = perturbation_constants(n, c, opt);
  const double core = sigma * eps * n.lambda_r * n.lambda_w * n.lambda_w;
  RequiredAccuracies a;
  a.eps_pgd = core / (2.0 * k.h_grad * sigma_star_norm);
  a.eps_pgd_statement = core / (k.h_cost * sigma_star_norm);
  a.eps_npg_grad = core / (8.0 * k.h_grad * sigma_star_norm);
  a.eps_npg_cov = core * n.lambda_w / (4.0 * k.h_grad * sigma_star_norm * std::sqrt(k.b_grad));
  return a;
}

struct ContractionInputs {
  double c0 = 0.0;
  double c_star = 0.0;
  double eps = 0.0;
  double sigma_star_norm = 0.0;
  double eta_pgd = 0.0;   // initial (or infimum) PGD step
  double eta_npg = 0.0;   // infimum NPG step
  double sigma = 0.5;     // model-free accuracy split
};

struct IterationCounts {
  double pgd = 0.0;           // model-based adaptive PGD
  double npg = 0.0;           // model-based NPG at the certified step
  double gauss_newton = 0.0;  // step 1/2
  double mf_pgd = 0.0;
  double mf_npg = 0.0;
};

inline IterationCounts iteration_counts(const PlantNorms& n, const ContractionInputs& in) {
  detail::require_positive(in.eps, "eps");
  IterationCounts out;
  if (in.c0 <= in.c_star + in.eps) return out;
  const double log_term = std::log((in.c0 - in.c_star) / in.eps);
  const double s = in.sigma_star_norm;
  const double lr = n.lambda_r, lw = n.lambda_w;
  auto ceil0 = [](double v) { return std::isfinite(v) ? std::ceil(v) : v; };
  if (in.eta_pgd > 0.0) {
    out.pgd = ceil0(s / (2.0 * in.eta_pgd * lr * lw * lw) * log_term);
    out.mf_pgd = ceil0(s / (2.0 * (1.0 - in.sigma) * in.eta_pgd * lr * lw * lw) * log_term);
  }
  out.npg = ceil0(s / (2.0 * lw) * (n.norm_r / lr + n.norm_b * n.norm_b * in.c0 / (lr * lw)) * log_term);
  out.gauss_newton = ceil0(s / lw * log_term);
  if (in.eta_npg > 0.0) out.mf_npg = ceil0(s / (2.0 * (1.0 - in.sigma) * in.eta_npg * lw) * log_term);
  return out;
}

}  // namespace pglqr
