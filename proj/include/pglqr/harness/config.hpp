#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pglqr/control/riccati.hpp"
#include "pglqr/optim/model_free.hpp"

namespace pglqr {

using Json = nlohmann::ordered_json;

enum class OptimizerKind { mb_pgd, mb_npg, mb_gauss_newton, noisy_pgd, mf_pgd, mf_npg };
enum class EstimatorKind { sphere, baseline };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::mb_pgd: return "mb_pgd";
    case OptimizerKind::mb_npg: return "mb_npg";
    case OptimizerKind::mb_gauss_newton: return "mb_gauss_newton";
    case OptimizerKind::noisy_pgd: return "noisy_pgd";
    case OptimizerKind::mf_pgd: return "mf_pgd";
    case OptimizerKind::mf_npg: return "mf_npg";
  }
  return "unknown";
}

inline bool is_model_free(OptimizerKind k) { return k == OptimizerKind::mf_pgd || k == OptimizerKind::mf_npg; }

struct FromBounds {
  double eps = 0.0;
  double delta = 0.0;
  double sigma = 0.5;
  CertificateMode mode = CertificateMode::online;
  std::optional<double> L0;
  double max_rollouts = 1e7;
  double max_length = 1e6;
};

struct ExperimentConfig {
  std::string label = "run";
  std::optional<PlantModel> plant;
  Gain initial_gain;
  OptimizerKind optimizer = OptimizerKind::mb_pgd;
  EstimatorKind estimator = EstimatorKind::sphere;
  std::size_t baseline_rollouts = 200;
  double gradient_noise_sigma = 0.0;
  StepSchedule step;
  std::optional<RolloutConfig> rollouts;
  std::optional<FromBounds> from_bounds;
  StopCriteria stop;
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;  // 0 = auto
  std::string output_dir = "out";
  Json echo;  // the validated input document

  const PlantModel& model() const { return *plant; }
};

// Benchmark matrices: three coupled unstable modes, full actuation.
inline Matrix benchmark_a() {
  Matrix a(3, 3);
  a << 1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01;
  return a;
}

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); }

  void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) error(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }

  std::optional<double> number(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (!v.is_number()) {
      error(where + "." + key, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<double> positive(const Json& obj, const std::string& key, const std::string& where) {
    auto v = number(obj, key, where);
    if (v && !(*v > 0.0 && std::isfinite(*v))) {
      error(where + "." + key, "must be positive, got " + format(*v));
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::uint64_t> count(const Json& obj, const std::string& key, const std::string& where,
                                     std::uint64_t min_value = 1) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      error(where + "." + key, "expected a nonnegative integer");
      return std::nullopt;
    }
    const auto n = v.get<std::uint64_t>();
    if (n < min_value) {
      error(where + "." + key, "must be at least " + std::to_string(min_value));
      return std::nullopt;
    }
    return n;
  }

  std::optional<std::string> text(const Json& obj, const std::string& key, const std::string& where,
                                  const std::set<std::string>& choices = {}) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (!v.is_string()) {
      error(where + "." + key, "expected a string");
      return std::nullopt;
    }
    auto s = v.get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      error(where + "." + key, "'" + s + "' is not one of {" + list + "}");
      return std::nullopt;
    }
    return s;
  }

  std::optional<Matrix> matrix(const Json& v, const std::string& where) {
    if (v.is_number()) {
      Matrix m(1, 1);
      m(0, 0) = v.get<double>();
      return m;
    }
    if (!v.is_array() || v.empty()) {
      error(where, "expected a nonempty array of rows");
      return std::nullopt;
    }
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (!v[i].is_array() || v[i].empty()) {
        error(where + "[" + std::to_string(i) + "]", "expected a nonempty row");
        return std::nullopt;
      }
      if (i == 0) cols = v[i].size();
      if (v[i].size() != cols) {
        error(where + "[" + std::to_string(i) + "]", "row has " + std::to_string(v[i].size()) + " entries, expected " +
                                                         std::to_string(cols));
        return std::nullopt;
      }
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const Json& x = v[i][j];
        if (!x.is_number()) {
          error(where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", "expected a number");
          return std::nullopt;
        }
        m(static_cast<Index>(i), static_cast<Index>(j)) = x.get<double>();
      }
    return m;
  }

  // shortest text that reads back to the same double
  static std::string format(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
};

inline Matrix identity_like(Index n, double scale) { return scale * Matrix::Identity(n, n); }

}  // namespace detail

// Parses and validates a config document; collects every violation before throwing.
inline ExperimentConfig parse_config(const Json& doc) {
  detail::ConfigReader rd;
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  cfg.echo = doc;
  rd.check_keys(doc, "", {"label", "plant", "initial_gain", "optimizer", "step", "rollouts", "from_bounds", "stop",
                          "monte_carlo", "output_dir"});
  if (auto s = rd.text(doc, "label", "config")) cfg.label = *s;
  if (auto s = rd.text(doc, "output_dir", "config")) cfg.output_dir = *s;

  // plant
  std::optional<Matrix> a, b, q, r, sw, s0;
  std::optional<std::string> preset;
  if (!doc.contains("plant") || !doc.at("plant").is_object()) {
    rd.error("plant", "required object is missing");
  } else {
    const Json& p = doc.at("plant");
    rd.check_keys(p, "plant", {"preset", "A", "B", "Q", "R", "noise_cov", "noise_cov_scale", "initial_cov",
                               "initial_cov_scale", "state_weight_scale"});
    preset = rd.text(p, "preset", "plant", {"paper3x3", "scalar_s1"});
    if (preset == "paper3x3") {
      a = benchmark_a();
      b = Matrix::Identity(3, 3);
      q = detail::identity_like(3, 0.001);
      r = Matrix::Identity(3, 3);
      sw = Matrix::Identity(3, 3);
    } else if (preset == "scalar_s1") {
      a = Matrix::Constant(1, 1, 0.5);
      b = Matrix::Constant(1, 1, 1.0);
      q = Matrix::Constant(1, 1, 1.0);
      r = Matrix::Constant(1, 1, 1.0);
      sw = Matrix::Constant(1, 1, 1.0);
    }
    for (const char* key : {"A", "B", "Q", "R", "noise_cov", "initial_cov"}) {
      if (!p.contains(key)) continue;
      auto m = rd.matrix(p.at(key), std::string("plant.") + key);
      const std::string k = key;
      if (k == "A") a = m;
      else if (k == "B") b = m;
      else if (k == "Q") q = m;
      else if (k == "R") r = m;
      else if (k == "noise_cov") sw = m;
      else s0 = m;
    }
    if (p.contains("noise_cov") && p.contains("noise_cov_scale"))
      rd.error("plant", "give noise_cov or noise_cov_scale, not both");
    if (p.contains("initial_cov") && p.contains("initial_cov_scale"))
      rd.error("plant", "give initial_cov or initial_cov_scale, not both");
    for (const char* key : {"A", "B", "Q", "R"})
      if (!preset && !p.contains(key)) rd.error(std::string("plant.") + key, "missing (or set plant.preset)");
    if (a && a->rows() != a->cols()) rd.error("plant.A", "must be square, got " + shape_string(*a));
    const Index n = a ? a->rows() : 0;
    if (auto v = rd.number(p, "noise_cov_scale", "plant")) {
      if (*v < 0.0) rd.error("plant.noise_cov_scale", "must be nonnegative");
      else if (n > 0) sw = detail::identity_like(n, *v);
    }
    if (auto v = rd.number(p, "initial_cov_scale", "plant")) {
      if (*v < 0.0) rd.error("plant.initial_cov_scale", "must be nonnegative");
      else if (n > 0) s0 = detail::identity_like(n, *v);
    }
    if (auto v = rd.positive(p, "state_weight_scale", "plant")) {
      if (q) *q *= *v;
    }
    if (!sw && n > 0) rd.error("plant.noise_cov", "missing (or set plant.noise_cov_scale)");
    if (!s0) s0 = sw;  // initial states share the process-noise covariance unless given
    if (a && b && q && r && sw && s0 && rd.errors.empty()) {
      try {
        cfg.plant.emplace(*a, *b, *q, *r, *sw, *s0);
      } catch (const ConfigError& e) {
        rd.error("plant", e.what());
      }
    }
  }

  // initial gain
  if (doc.contains("initial_gain")) {
    const Json& g = doc.at("initial_gain");
    if (g.is_string()) {
      const auto s = g.get<std::string>();
      if (s != "optimal_50q" && s != "zero") rd.error("initial_gain", "'" + s + "' is not one of {optimal_50q, zero}");
      if (cfg.plant) {
        if (s == "zero") {
          cfg.initial_gain = Gain(Matrix::Zero(cfg.plant->input_dim(), cfg.plant->state_dim()));
        } else if (s == "optimal_50q") {
          try {
            cfg.initial_gain = solve_dare(cfg.plant->with_q(50.0 * cfg.plant->q())).K_star;
          } catch (const Error& e) {
            rd.error("initial_gain", e.what());
          }
        }
      }
    } else if (auto m = rd.matrix(g, "initial_gain")) {
      cfg.initial_gain = Gain(*m);
    }
  } else {
    rd.error("initial_gain", "required (matrix, \"zero\" or \"optimal_50q\")");
  }
  if (cfg.plant && cfg.initial_gain.matrix().size() > 0) {
    if (cfg.initial_gain.inputs() != cfg.plant->input_dim() || cfg.initial_gain.states() != cfg.plant->state_dim())
      rd.error("initial_gain", "shape " + shape_string(cfg.initial_gain.matrix()) + " does not match plant (" +
                                   std::to_string(cfg.plant->input_dim()) + "x" +
                                   std::to_string(cfg.plant->state_dim()) + ")");
    else if (!is_stabilizing(*cfg.plant, cfg.initial_gain))
      rd.error("initial_gain", "not stabilizing (spectral radius " +
                                   detail::ConfigReader::format(closed_loop(*cfg.plant, cfg.initial_gain).stability.spectral_radius) +
                                   ")");
  }

  // optimizer
  if (!doc.contains("optimizer") || !doc.at("optimizer").is_object()) {
    rd.error("optimizer", "required object is missing");
  } else {
    const Json& o = doc.at("optimizer");
    rd.check_keys(o, "optimizer", {"kind", "estimator", "baseline_rollouts", "gradient_noise_sigma"});
    const auto kind = rd.text(o, "kind", "optimizer",
                              {"mb_pgd", "mb_npg", "mb_gauss_newton", "noisy_pgd", "mf_pgd", "mf_npg"});
    if (!o.contains("kind")) rd.error("optimizer.kind", "required");
    if (kind == "mb_pgd") cfg.optimizer = OptimizerKind::mb_pgd;
    if (kind == "mb_npg") cfg.optimizer = OptimizerKind::mb_npg;
    if (kind == "mb_gauss_newton") cfg.optimizer = OptimizerKind::mb_gauss_newton;
    if (kind == "noisy_pgd") cfg.optimizer = OptimizerKind::noisy_pgd;
    if (kind == "mf_pgd") cfg.optimizer = OptimizerKind::mf_pgd;
    if (kind == "mf_npg") cfg.optimizer = OptimizerKind::mf_npg;
    if (auto e = rd.text(o, "estimator", "optimizer", {"sphere", "baseline"}))
      cfg.estimator = *e == "baseline" ? EstimatorKind::baseline : EstimatorKind::sphere;
    if (auto nb = rd.count(o, "baseline_rollouts", "optimizer")) cfg.baseline_rollouts = *nb;
    if (auto s = rd.number(o, "gradient_noise_sigma", "optimizer")) {
      if (*s < 0.0) rd.error("optimizer.gradient_noise_sigma", "must be nonnegative");
      cfg.gradient_noise_sigma = *s;
    }
    if (cfg.estimator == EstimatorKind::baseline && cfg.optimizer != OptimizerKind::mf_pgd)
      rd.error("optimizer.estimator", "the baseline estimator only drives mf_pgd");
  }

  // step schedule
  if (doc.contains("step")) {
    const Json& s = doc.at("step");
    rd.check_keys(s, "step", {"kind", "step_size", "a", "b", "c"});
    const auto kind = rd.text(s, "kind", "step", {"fixed", "adaptive_certified", "adaptive_empirical"});
    if (kind == "adaptive_certified") {
      cfg.step = StepSchedule::certified();
    } else if (kind == "adaptive_empirical") {
      auto a_ = rd.positive(s, "a", "step");
      auto b_ = rd.number(s, "b", "step");
      auto c_ = rd.number(s, "c", "step");
      if (!a_ || !b_ || !c_) rd.error("step", "adaptive_empirical needs a, b and c");
      else cfg.step = StepSchedule::empirical(*a_, *b_, *c_);
    } else {
      auto eta = rd.positive(s, "step_size", "step");
      if (!s.contains("step_size")) rd.error("step.step_size", "required for a fixed schedule");
      if (eta) cfg.step = StepSchedule::fixed(*eta);
    }
  } else if (cfg.optimizer != OptimizerKind::mb_gauss_newton) {
    rd.error("step", "required object is missing");
  } else {
    cfg.step = StepSchedule::fixed(0.5);
  }
  if (cfg.optimizer == OptimizerKind::mb_gauss_newton && cfg.step.kind == StepKind::fixed &&
      cfg.step.eta > 0.5)
    rd.error("step.step_size", "Gauss-Newton needs a step in (0, 1/2]");
  if (cfg.optimizer == OptimizerKind::noisy_pgd && cfg.step.kind != StepKind::fixed)
    rd.error("step.kind", "noisy_pgd runs with a fixed step");

  // rollouts
  const bool mf = is_model_free(cfg.optimizer);
  if (doc.contains("rollouts")) {
    const Json& ro = doc.at("rollouts");
    rd.check_keys(ro, "rollouts", {"n", "l", "radius", "initial_state_bound"});
    RolloutConfig rc;
    bool ok = true;
    for (const char* key : {"n", "l", "radius"})
      if (!ro.contains(key)) {
        rd.error(std::string("rollouts.") + key, "missing (set it, or replace rollouts by from_bounds)");
        ok = false;
      }
    if (auto n = rd.count(ro, "n", "rollouts")) rc.n = *n; else ok = false;
    if (auto l = rd.count(ro, "l", "rollouts")) rc.l = *l; else ok = false;
    if (auto r_ = rd.positive(ro, "radius", "rollouts")) rc.r = *r_; else ok = false;
    if (auto L0 = rd.positive(ro, "initial_state_bound", "rollouts")) rc.L0 = *L0;
    else if (ro.contains("initial_state_bound")) ok = false;
    else if (cfg.plant) rc.L0 = default_initial_bound(cfg.plant->sigma_0());
    if (ok) cfg.rollouts = rc;
  }
  if (doc.contains("from_bounds")) {
    const Json& fb = doc.at("from_bounds");
    rd.check_keys(fb, "from_bounds", {"eps", "delta", "sigma", "mode", "initial_state_bound", "max_rollouts",
                                      "max_length"});
    FromBounds f;
    if (auto e = rd.positive(fb, "eps", "from_bounds")) f.eps = *e;
    else rd.error("from_bounds.eps", "required positive");
    if (auto d = rd.number(fb, "delta", "from_bounds"); d && *d > 0.0 && *d < 1.0) f.delta = *d;
    else rd.error("from_bounds.delta", "required in (0, 1)");
    if (auto s = rd.number(fb, "sigma", "from_bounds")) {
      if (!(*s > 0.0 && *s < 1.0)) rd.error("from_bounds.sigma", "must lie in (0, 1)");
      f.sigma = *s;
    }
    if (auto m = rd.text(fb, "mode", "from_bounds", {"online", "offline"}))
      f.mode = *m == "offline" ? CertificateMode::offline : CertificateMode::online;
    if (auto L0 = rd.positive(fb, "initial_state_bound", "from_bounds")) f.L0 = *L0;
    if (auto v = rd.positive(fb, "max_rollouts", "from_bounds")) f.max_rollouts = *v;
    if (auto v = rd.positive(fb, "max_length", "from_bounds")) f.max_length = *v;
    cfg.from_bounds = f;
  }
  if (mf && !doc.contains("rollouts") && !doc.contains("from_bounds"))
    rd.error("rollouts", "model-free runs need rollouts {n, l, radius} or from_bounds {eps, delta}");
  if (doc.contains("rollouts") && doc.contains("from_bounds"))
    rd.error("rollouts", "set exactly one of rollouts and from_bounds");

  // stop
  if (doc.contains("stop")) {
    const Json& st = doc.at("stop");
    rd.check_keys(st, "stop", {"max_iterations", "target_rel_subopt", "divergence_factor", "stationary_tol"});
    if (auto m = rd.count(st, "max_iterations", "stop", 0)) cfg.stop.max_iterations = *m;
    if (auto t = rd.positive(st, "target_rel_subopt", "stop")) cfg.stop.target_rel_subopt = *t;
    if (auto d = rd.positive(st, "divergence_factor", "stop")) cfg.stop.divergence_factor = *d;
    if (auto d = rd.number(st, "stationary_tol", "stop")) cfg.stop.stationary_tol = *d;
  }

  // monte carlo
  if (doc.contains("monte_carlo")) {
    const Json& mc = doc.at("monte_carlo");
    rd.check_keys(mc, "monte_carlo", {"repetitions", "master_seed", "threads"});
    if (auto n = rd.count(mc, "repetitions", "monte_carlo")) cfg.repetitions = *n;
    if (auto s = rd.count(mc, "master_seed", "monte_carlo", 0)) cfg.master_seed = *s;
    if (mc.contains("threads")) {
      const Json& t = mc.at("threads");
      if (t.is_string() && t.get<std::string>() == "auto") cfg.threads = 0;
      else if (auto n = rd.count(mc, "threads", "monte_carlo")) cfg.threads = *n;
    }
  }

  if (!rd.errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(rd.errors.size()) + " problem" +
                      (rd.errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : rd.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  if (cfg.step.kind == StepKind::adaptive_certified || cfg.step.kind == StepKind::adaptive_empirical) {
    cfg.step.norms = plant_norms(*cfg.plant);
    cfg.step.noise_trace = cfg.plant->sigma_w().trace();
  }
  return cfg;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& path) { return parse_config(read_json_file(path)); }

}  // namespace pglqr
