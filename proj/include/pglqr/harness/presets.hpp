#pragma once

#include <string>
#include <vector>

#include "pglqr/harness/config.hpp"

namespace pglqr {

struct FigureSeries {
  std::string label;
  ExperimentConfig config;
};

struct FigurePreset {
  std::string name;
  std::string description;
  std::vector<FigureSeries> series;
};

// Overrides applied on top of every series of a preset.
struct PresetOverrides {
  std::optional<std::size_t> repetitions;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::size_t> max_iterations;
  std::optional<std::size_t> rollouts;           // outer rollout count n
  std::optional<std::size_t> baseline_rollouts;  // rollouts per baseline value
};

namespace detail {

inline Json bench_plant(double noise_scale) {
  return Json{{"preset", "paper3x3"}, {"noise_cov_scale", noise_scale}};
}

inline void apply_overrides(Json& doc, const PresetOverrides& o) {
  if (o.repetitions) doc["monte_carlo"]["repetitions"] = *o.repetitions;
  if (o.master_seed) doc["monte_carlo"]["master_seed"] = *o.master_seed;
  if (o.max_iterations) doc["stop"]["max_iterations"] = *o.max_iterations;
  if (o.rollouts && doc.contains("rollouts")) doc["rollouts"]["n"] = *o.rollouts;
  if (o.baseline_rollouts && doc.contains("optimizer") && doc["optimizer"].contains("baseline_rollouts"))
    doc["optimizer"]["baseline_rollouts"] = *o.baseline_rollouts;
}

inline std::string scale_tag(double s) {
  if (s == 1e-4) return "1e-4";
  if (s == 1e-2) return "1e-2";
  if (s == 1.0) return "1";
  return ConfigReader::format(s);
}

}  // namespace detail

// Noise level used for the exact-gradient experiment; not given with the benchmark, calibrated here.
inline constexpr double kFigure1NoiseScale = 0.3;

inline std::vector<std::string> figure_names() { return {"fig1", "fig2", "fig3", "fig4"}; }

inline FigurePreset figure_preset(const std::string& name, const PresetOverrides& over = {}) {
  FigurePreset fp;
  fp.name = name;
  std::vector<std::pair<std::string, Json>> docs;
  if (name == "fig1") {
    fp.description = "PGD with exact gradients plus injected Gaussian noise";
    for (double sigma : {0.0, 0.03, 0.6})
      for (double eta : {0.12, 0.01}) {
        const std::string label = "fig1_sigma" + detail::ConfigReader::format(sigma) + "_eta" +
                                  detail::ConfigReader::format(eta);
        docs.push_back({label, Json{{"label", label},
                                    {"plant", detail::bench_plant(kFigure1NoiseScale)},
                                    {"initial_gain", "optimal_50q"},
                                    {"optimizer", {{"kind", "noisy_pgd"}, {"gradient_noise_sigma", sigma}}},
                                    {"step", {{"kind", "fixed"}, {"step_size", eta}}},
                                    {"stop", {{"max_iterations", 500}}},
                                    {"monte_carlo", {{"repetitions", 500}, {"master_seed", 1}}}}});
      }
  } else if (name == "fig2") {
    fp.description = "model-free PGD, noise level against step size";
    for (auto [scale, eta] : std::vector<std::pair<double, double>>{{1e-4, 40.0}, {1e-2, 6.0}, {1e-2, 0.3}}) {
      const std::string label = "fig2_w" + detail::scale_tag(scale) + "_eta" + detail::ConfigReader::format(eta);
      docs.push_back({label, Json{{"label", label},
                                  {"plant", detail::bench_plant(scale)},
                                  {"initial_gain", "optimal_50q"},
                                  {"optimizer", {{"kind", "mf_pgd"}, {"estimator", "sphere"}}},
                                  {"step", {{"kind", "fixed"}, {"step_size", eta}}},
                                  {"rollouts", {{"n", 1000}, {"l", 100}, {"radius", 0.04}}},
                                  {"stop", {{"max_iterations", 150}}},
                                  {"monte_carlo", {{"repetitions", 5}, {"master_seed", 1}}}}});
    }
  } else if (name == "fig3") {
    fp.description = "model-free PGD with and without a baseline";
    for (auto [scale, eta] : std::vector<std::pair<double, double>>{{1e-4, 40.0}, {1e-2, 0.3}})
      for (bool vr : {false, true}) {
        const std::string label = "fig3_w" + detail::scale_tag(scale) + (vr ? "_baseline" : "_plain");
        Json opt{{"kind", "mf_pgd"}, {"estimator", vr ? "baseline" : "sphere"}};
        if (vr) opt["baseline_rollouts"] = 200;
        docs.push_back({label, Json{{"label", label},
                                    {"plant", detail::bench_plant(scale)},
                                    {"initial_gain", "optimal_50q"},
                                    {"optimizer", opt},
                                    {"step", {{"kind", "fixed"}, {"step_size", eta}}},
                                    {"rollouts", {{"n", 100}, {"l", 100}, {"radius", 0.04}}},
                                    {"stop", {{"max_iterations", 40}}},
                                    {"monte_carlo", {{"repetitions", 5}, {"master_seed", 1}}}}});
      }
  } else if (name == "fig4") {
    fp.description = "model-free NPG, fixed against adaptive step";
    const double a = 0.09, b = 1.0, c = 2.0;
    auto npg = [&](const std::string& label, double scale, Json step) {
      return std::pair<std::string, Json>{
          label, Json{{"label", label},
                      {"plant", detail::bench_plant(scale)},
                      {"initial_gain", "optimal_50q"},
                      {"optimizer", {{"kind", "mf_npg"}}},
                      {"step", std::move(step)},
                      {"rollouts", {{"n", 1000}, {"l", 100}, {"radius", 0.04}}},
                      {"stop", {{"max_iterations", 150}}},
                      {"monte_carlo", {{"repetitions", 5}, {"master_seed", 1}}}}};
    };
    // fixed eta = a / (b + c Tr(P_K0)); P_K does not depend on the noise level
    Json probe = {{"plant", detail::bench_plant(1.0)},
                  {"initial_gain", "optimal_50q"},
                  {"optimizer", {{"kind", "mb_npg"}}},
                  {"step", {{"kind", "fixed"}, {"step_size", 1.0}}}};
    const ExperimentConfig pc = parse_config(probe);
    const double trace_p0 = exact_quantities(pc.model(), pc.initial_gain).P.trace();
    const double eta0 = a / (b + c * trace_p0);
    for (double scale : {1e-4, 1e-2, 1.0})
      docs.push_back(npg("fig4_w" + detail::scale_tag(scale) + "_fixed", scale,
                         Json{{"kind", "fixed"}, {"step_size", eta0}}));
    docs.push_back(npg("fig4_w1e-2_adaptive", 1e-2, Json{{"kind", "adaptive_empirical"}, {"a", a}, {"b", b}, {"c", c}}));
  } else {
    throw ConfigError("unknown figure preset '" + name + "' (expected fig1, fig2, fig3 or fig4)");
  }
  for (auto& [label, doc] : docs) {
    detail::apply_overrides(doc, over);
    fp.series.push_back({label, parse_config(doc)});
  }
  return fp;
}

}  // namespace pglqr
