#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pglqr/pglqr.hpp"

namespace fs = std::filesystem;
using namespace pglqr;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> repetitions;
  std::string threads;
  std::string format = "csv";
};

std::size_t parse_threads(const std::string& s, std::size_t fallback) {
  if (s.empty()) return fallback;
  if (s == "auto") return 0;
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(s, &pos);
    if (pos == s.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--threads expects a positive integer or 'auto', got '" + s + "'");
}

ExperimentConfig load(const CommonFlags& f) {
  if (f.config.empty()) throw UsageError("--config is required");
  ExperimentConfig cfg = parse_config(f.config);
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.repetitions) {
    if (*f.repetitions == 0) throw UsageError("--repetitions must be positive");
    cfg.repetitions = *f.repetitions;
  }
  cfg.threads = parse_threads(f.threads, cfg.threads);
  return cfg;
}

void print_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    os << name << '[' << i << "] =";
    for (Index j = 0; j < m.cols(); ++j) os << ' ' << format_double(m(i, j));
    os << '\n';
  }
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int cmd_validate(const std::string& path) {
  const ExperimentConfig cfg = parse_config(path);
  std::cout << "ok: " << cfg.label << " (" << to_string(cfg.optimizer) << ", " << cfg.model().state_dim() << " states, "
            << cfg.model().input_dim() << " inputs)\n";
  return 0;
}

int cmd_exact(const CommonFlags& f) {
  const ExperimentConfig cfg = load(f);
  const ClosedLoopQuantities q = exact_quantities(cfg.model(), cfg.initial_gain);
  const OptimalSolution opt = solve_dare(cfg.model());
  const double mu = gradient_domination_mu(cfg.model(), opt);
  if (f.format == "json") {
    Json j;
    j["gain"] = matrix_json(cfg.initial_gain.matrix());
    j["cost"] = q.cost;
    j["P"] = matrix_json(q.P);
    j["Sigma"] = matrix_json(q.Sigma);
    j["E"] = matrix_json(q.E);
    j["grad"] = matrix_json(q.grad);
    j["optimal"] = {{"K_star", matrix_json(opt.K_star.matrix())},
                    {"P_star", matrix_json(opt.P_star)},
                    {"Sigma_star", matrix_json(opt.Sigma_star)},
                    {"C_star", opt.C_star},
                    {"iterations", opt.iterations}};
    j["gradient_domination_mu"] = mu;
    std::cout << j.dump(2) << '\n';
  } else {
    print_matrix(std::cout, "K", cfg.initial_gain.matrix());
    std::cout << "cost = " << format_double(q.cost) << '\n';
    print_matrix(std::cout, "P", q.P);
    print_matrix(std::cout, "Sigma", q.Sigma);
    print_matrix(std::cout, "E", q.E);
    print_matrix(std::cout, "grad", q.grad);
    print_matrix(std::cout, "K_star", opt.K_star.matrix());
    print_matrix(std::cout, "P_star", opt.P_star);
    std::cout << "C_star = " << format_double(opt.C_star) << '\n';
    std::cout << "rel_subopt = " << format_double(relative_suboptimality(q.cost, opt.C_star)) << '\n';
    std::cout << "gradient_domination_mu = " << format_double(mu) << '\n';
  }
  return 0;
}

void print_summary(const MonteCarloResult& mc) {
  std::size_t diverged = 0, failed = 0;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& run : mc.runs) {
    if (run.failure) {
      ++failed;
      continue;
    }
    if (run.trace->diverged()) {
      ++diverged;
      continue;
    }
    sum += run.trace->last().rel_subopt;
    ++counted;
  }
  std::cout << mc.label << ": runs=" << mc.runs.size() << " diverged=" << diverged << " failed=" << failed
            << " mean_final_rel_subopt=" << format_double(counted ? sum / static_cast<double>(counted) : NAN) << '\n';
}

int cmd_run(const CommonFlags& f, bool model_free) {
  ExperimentConfig cfg = load(f);
  if (is_model_free(cfg.optimizer) != model_free)
    throw UsageError(std::string("optimizer ") + to_string(cfg.optimizer) + " belongs to " +
                     (model_free ? "mb-run" : "mf-run"));
  const MonteCarloResult mc = run_monte_carlo(cfg);
  write_bundle(f.out.empty() ? fs::path(cfg.output_dir) : fs::path(f.out), cfg, mc, cfg.threads);
  print_summary(mc);
  return 0;
}

int cmd_estimate(const CommonFlags& f) {
  ExperimentConfig cfg = load(f);
  const PlantModel& plant = cfg.model();
  const OptimalSolution opt = solve_dare(plant);
  const ModelFreeConfig mf = model_free_setup(cfg, opt);
  RolloutConfig rc;
  if (cfg.rollouts) rc = *cfg.rollouts;
  else if (mf.certified) rc = detail::certified_plan(*mf.certified, *mf.initial_cost, cfg.optimizer == OptimizerKind::mf_npg);
  else throw UsageError("estimate needs rollouts or from_bounds in the config");
  PlantRolloutOracle oracle(plant);
  const ClosedLoopQuantities exact = exact_quantities(plant, cfg.initial_gain);
  const SeedSpec seeds{cfg.master_seed};
  std::vector<Matrix> grads(cfg.repetitions), covs(cfg.repetitions);
  std::vector<double> costs(cfg.repetitions);
  std::vector<bool> failed(cfg.repetitions, false);
  // repetitions fan out; each estimate runs sequentially inside its own substreams
  parallel_for(cfg.repetitions, cfg.threads, [&](std::size_t r) {
    EstimatorOptions eo{seeds, r, 0, false, 1};
    if (cfg.estimator == EstimatorKind::baseline) {
      GradientEstimate g = estimate_gradient_vr(oracle, cfg.initial_gain, rc, cfg.baseline_rollouts, eo);
      failed[r] = g.failed;
      grads[r] = g.value;
      costs[r] = g.mean_cost;
      covs[r] = Matrix::Zero(plant.state_dim(), plant.state_dim());
    } else {
      GradientCovarianceEstimate e = estimate_gradient_covariance(oracle, cfg.initial_gain, rc, eo);
      failed[r] = e.gradient.failed;
      grads[r] = e.gradient.value;
      covs[r] = e.covariance.value;
      costs[r] = e.gradient.mean_cost;
    }
  });
  std::vector<Matrix> ok;
  for (std::size_t r = 0; r < grads.size(); ++r)
    if (!failed[r]) ok.push_back(grads[r]);
  if (ok.empty()) throw NumericError("every estimate overflowed");
  const EstimatorSummary s = estimator_diagnostics(ok, exact.grad);
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::ofstream os(fs::path(f.out) / (cfg.label + "_estimates.csv"), std::ios::binary);
    if (!os) throw IoError("cannot write estimates under " + f.out);
    os << "run_id,kind,row,col,value,exact\n";
    for (std::size_t r = 0; r < grads.size(); ++r) {
      if (failed[r]) {
        os << r << ",failed,0,0,nan,nan\n";
        continue;
      }
      for (Index j = 0; j < grads[r].cols(); ++j)
        for (Index i = 0; i < grads[r].rows(); ++i)
          os << r << ",grad," << i << ',' << j << ',' << format_double(grads[r](i, j)) << ','
             << format_double(exact.grad(i, j)) << '\n';
      for (Index j = 0; j < covs[r].cols(); ++j)
        for (Index i = 0; i < covs[r].rows(); ++i)
          os << r << ",sigma," << i << ',' << j << ',' << format_double(covs[r](i, j)) << ','
             << format_double(exact.Sigma(i, j)) << '\n';
      os << r << ",cost,0,0," << format_double(costs[r]) << ',' << format_double(exact.cost) << '\n';
    }
    if (!os) throw IoError("write failed under " + f.out);
  }
  if (f.format == "json") {
    Json j;
    j["rollouts"] = {{"n", rc.n}, {"l", rc.l}, {"radius", rc.r}, {"initial_state_bound", rc.L0}};
    j["estimates"] = ok.size();
    j["failed"] = grads.size() - ok.size();
    j["mean"] = matrix_json(s.mean);
    j["exact"] = matrix_json(exact.grad);
    if (s.mean_error) j["mean_frobenius_error"] = *s.mean_error;
    if (s.median_error) j["median_frobenius_error"] = *s.median_error;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "n = " << rc.n << ", l = " << rc.l << ", r = " << format_double(rc.r) << ", estimates = " << ok.size()
              << '\n';
    print_matrix(std::cout, "mean_grad", s.mean);
    print_matrix(std::cout, "exact_grad", exact.grad);
    if (s.median_error) std::cout << "median_frobenius_error = " << format_double(*s.median_error) << '\n';
  }
  return 0;
}

int cmd_bounds(const CommonFlags& f, std::optional<double> cost, double eps_component, double delta_component,
               const std::string& state_mode) {
  const ExperimentConfig cfg = load(f);
  const PlantModel& plant = cfg.model();
  BoundsRequest req;
  req.cost = cost ? *cost : exact_quantities(plant, cfg.initial_gain).cost;
  req.gradient_budget = ErrorBudget{eps_component,   eps_component,   eps_component,  eps_component,
                                    delta_component, delta_component, delta_component};
  req.covariance_budget = CovErrorBudget{eps_component, eps_component, eps_component, delta_component,
                                         delta_component};
  req.L0 = cfg.rollouts ? cfg.rollouts->L0 : default_initial_bound(plant.sigma_0());
  if (cfg.from_bounds && cfg.from_bounds->L0) req.L0 = *cfg.from_bounds->L0;
  req.options.state_mode = state_mode == "chebyshev" ? StateBoundMode::chebyshev : StateBoundMode::linear;
  const Json report = bounds_report(plant, req);
  if (f.format == "json") std::cout << report.dump(2) << '\n';
  else write_bounds_text(std::cout, report);
  return 0;
}

int cmd_figure(const std::string& name, const CommonFlags& f, const PresetOverrides& base) {
  PresetOverrides over = base;
  over.repetitions = f.repetitions;
  over.master_seed = f.seed;
  const FigurePreset preset = figure_preset(name, over);
  const fs::path dir = f.out.empty() ? fs::path("out") / name : fs::path(f.out);
  std::cout << preset.name << ": " << preset.description << '\n';
  for (const auto& s : preset.series) {
    ExperimentConfig cfg = s.config;
    cfg.threads = parse_threads(f.threads, cfg.threads);
    const MonteCarloResult mc = run_monte_carlo(cfg);
    write_bundle(dir, cfg, mc, cfg.threads);
    print_summary(mc);
  }
  return 0;
}

void add_common(CLI::App* sub, CommonFlags& f, bool config = true) {
  if (config) sub->add_option("--config", f.config, "experiment config (JSON)");
  sub->add_option("--seed", f.seed, "master seed override");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--repetitions", f.repetitions, "Monte Carlo repetitions override");
  sub->add_option("--threads", f.threads, "worker threads: a positive integer or auto");
  sub->add_option("--format", f.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy gradient experiments for noisy linear quadratic control"};
  app.require_subcommand(1);
  CommonFlags f;
  std::string validate_path, figure_name, state_mode = "linear";
  std::optional<double> cost;
  double eps_component = 0.1, delta_component = 0.1;
  PresetOverrides over;

  auto* exact = app.add_subcommand("exact", "closed-loop quantities at the initial gain and the optimal solution");
  add_common(exact, f);
  auto* mb = app.add_subcommand("mb-run", "model-based optimizer runs");
  add_common(mb, f);
  auto* mf = app.add_subcommand("mf-run", "model-free optimizer runs");
  add_common(mf, f);
  auto* est = app.add_subcommand("estimate", "one-shot gradient estimates against the exact gradient");
  add_common(est, f);
  auto* bounds = app.add_subcommand("bounds", "certificate report for one cost level");
  add_common(bounds, f);
  bounds->add_option("--cost", cost, "cost level (default: cost of the initial gain)");
  bounds->add_option("--eps-component", eps_component, "value of every accuracy component");
  bounds->add_option("--delta-component", delta_component, "value of every probability component");
  bounds->add_option("--state-bound", state_mode, "linear or chebyshev")->check(CLI::IsMember({"linear", "chebyshev"}));
  auto* fig = app.add_subcommand("figure", "run a figure preset");
  fig->add_option("name", figure_name, "fig1, fig2, fig3 or fig4")->required();
  add_common(fig, f, false);
  fig->add_option("--iterations", over.max_iterations, "iteration cap override");
  fig->add_option("--rollouts", over.rollouts, "outer rollout count override");
  fig->add_option("--baseline-rollouts", over.baseline_rollouts, "rollouts per baseline value override");
  auto* val = app.add_subcommand("validate", "check a config and list every problem");
  val->add_option("config", validate_path, "config path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*val) return cmd_validate(validate_path);
    if (*exact) return cmd_exact(f);
    if (*mb) return cmd_run(f, false);
    if (*mf) return cmd_run(f, true);
    if (*est) return cmd_estimate(f);
    if (*bounds) return cmd_bounds(f, cost, eps_component, delta_component, state_mode);
    if (*fig) return cmd_figure(figure_name, f, over);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
