#pragma once

#include <ostream>
#include <string>

#include "pglqr/harness/config.hpp"

namespace pglqr {

struct BoundsRequest {
  double cost = 0.0;
  ErrorBudget gradient_budget;
  CovErrorBudget covariance_budget;
  double L0 = 1.0;
  BoundOptions options;
  std::optional<double> baseline_estimate;  // b-hat for the variance-reduction fields
};

// Every certificate field and intermediate constant for one cost level. Pure function of its inputs.
inline Json bounds_report(const PlantModel& plant, const BoundsRequest& req) {
  const PlantNorms n = plant_norms(plant);
  const PerturbationConstants k = perturbation_constants(n, req.cost, req.options);
  Json out;
  Json in;
  in["cost"] = req.cost;
  in["c_star"] = req.options.c_star;
  in["initial_state_bound"] = req.L0;
  in["state_bound_mode"] = to_string(req.options.state_mode);
  in["self_consistent_cbar"] = req.options.self_consistent_cbar;
  in["alpha3_noise_floor"] = req.options.alpha3_noise_floor;
  const ErrorBudget& gb = req.gradient_budget;
  in["gradient_budget"] = {{"eps_d", gb.eps_d}, {"eps_l", gb.eps_l}, {"eps_n", gb.eps_n}, {"eps_r", gb.eps_r},
                           {"delta_x", gb.delta_x}, {"delta_n", gb.delta_n}, {"delta_d", gb.delta_d}};
  const CovErrorBudget& cb = req.covariance_budget;
  in["covariance_budget"] = {{"eps_l", cb.eps_l}, {"eps_n", cb.eps_n}, {"eps_r", cb.eps_r},
                             {"delta_n", cb.delta_n}, {"delta_x", cb.delta_x}};
  out["inputs"] = in;
  out["plant_norms"] = {{"n_x", n.n_x},           {"n_u", n.n_u},           {"norm_a", n.norm_a},
                        {"norm_b", n.norm_b},     {"norm_r", n.norm_r},     {"lambda_min_q", n.lambda_q},
                        {"lambda_min_r", n.lambda_r}, {"lambda_min_w", n.lambda_w}, {"trace_w", n.trace_w},
                        {"norm_w", n.norm_w},     {"lambda_min_0", n.lambda_0}, {"norm_0", n.norm_0}};
  out["perturbation"] = {{"trust_radius", k.h},   {"lipschitz_sigma", k.h_sigma}, {"lipschitz_cost", k.h_cost},
                         {"lipschitz_grad", k.h_grad}, {"gain_bound", k.b_gain}, {"grad_bound", k.b_grad},
                         {"alpha1", k.alpha1},    {"alpha2", k.alpha2},       {"alpha3", k.alpha3}};
  out["step_bounds"] = {{"pgd", pgd_step_bound(n, req.cost, req.options.c_star)},
                        {"npg", npg_step_bound(n, req.cost)}};
  out["finite_horizon"] = {{"length_cost", finite_horizon_length_cost(n, req.cost, cb.eps_l)},
                           {"length_covariance", finite_horizon_length_covariance(n, req.cost, cb.eps_l)}};

  const GradientCertificate g = gradient_certificate(n, req.cost, gb, req.L0, req.options, k);
  out["gradient"] = {{"r_trust", g.r_trust},   {"r_gain", g.r_gain},     {"r_accuracy", g.r_accuracy},
                     {"r_max", g.r_max},       {"r_used", g.r_used},     {"c_perturbed", g.c_perturbed},
                     {"l_min_raw", g.l_min_raw}, {"l_min", g.l_min},     {"alpha4", g.alpha4},
                     {"alpha5", g.alpha5},     {"N1_raw", g.N1_raw},     {"N1", g.N1},
                     {"c_bar", g.c_bar},       {"alpha6", g.alpha6},     {"alpha7", g.alpha7},
                     {"alpha8", g.alpha8},     {"N2_raw", g.N2_raw},     {"N2", g.N2},
                     {"n_required", g.n_required()}};
  const CovarianceCertificate v = covariance_certificate(n, req.cost, cb, req.L0, req.options, k);
  out["covariance"] = {{"r_trust", v.r_trust},     {"r_gain", v.r_gain},   {"r_accuracy", v.r_accuracy},
                       {"r_max", v.r_max},         {"r_used", v.r_used},   {"c_perturbed", v.c_perturbed},
                       {"l_min_raw", v.l_min_raw}, {"l_min", v.l_min},     {"state_bound", v.state_bound},
                       {"alpha9", v.alpha9},       {"alpha10", v.alpha10}, {"n_min_raw", v.n_min_raw},
                       {"n_min", v.n_min}};
  out["combined"] = {{"n", std::max(g.n_required(), v.n_min)},
                     {"l", std::max(g.l_min, v.l_min)},
                     {"r", std::min(g.r_used, v.r_used)}};
  const std::size_t l = static_cast<std::size_t>(std::max(1.0, g.l_min));
  const double b_s = default_baseline_bound(n, req.cost, req.L0, l);
  const double b_hat = req.baseline_estimate ? *req.baseline_estimate : b_s;
  try {
    const VrCertificate vr = vr_certificate(n, req.cost, gb, b_hat, b_s, req.L0, std::nullopt, {}, req.options);
    out["variance_reduction"] = {{"b_s", vr.b_s},         {"b_hat", vr.b_hat},     {"c_bar", vr.c_bar},
                                 {"alpha7", vr.alpha7},   {"alpha11", vr.alpha11}, {"alpha12", vr.alpha12},
                                 {"N2", vr.N2},           {"N3", vr.N3},           {"c_bar_v", vr.c_bar_v},
                                 {"c_bar_e_v", vr.c_bar_e_v}, {"eps_v", vr.eps_v}, {"n_tilde", vr.n_tilde}};
  } catch (const DomainError& e) {
    out["variance_reduction"] = {{"error", e.what()}};
  }
  return out;
}

namespace detail {

inline void flatten_report(std::ostream& os, const Json& j, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten_report(os, *it, key);
    } else if (it->is_number_float()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", it->get<double>());
      os << key << " = " << buf << '\n';
    } else if (it->is_string()) {
      os << key << " = " << it->get<std::string>() << '\n';
    } else {
      os << key << " = " << it->dump() << '\n';
    }
  }
}

}  // namespace detail

inline void write_bounds_text(std::ostream& os, const Json& report) { detail::flatten_report(os, report, ""); }

}  // namespace pglqr
