#pragma once

#include <optional>
#include <string>

#include "pglqr/bounds/certificates.hpp"

namespace pglqr {

enum class StepKind { fixed, adaptive_certified, adaptive_empirical };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::fixed: return "fixed";
    case StepKind::adaptive_certified: return "adaptive_certified";
    case StepKind::adaptive_empirical: return "adaptive_empirical";
  }
  return "unknown";
}

// fixed: eta. adaptive_certified: the PGD or NPG step bound at the current cost.
// adaptive_empirical: a / (b + c * Tr(P)), Tr(P) read from the model or proxied from a cost estimate.
struct StepSchedule {
  StepKind kind = StepKind::fixed;
  double eta = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;
  std::optional<PlantNorms> norms;  // prior knowledge for certified steps without a model
  double c_star = 0.0;              // C(K*) used inside the certified bound; 0 is conservative
  std::optional<double> noise_trace;  // Tr(Sigma_w) for the empirical proxy

  static StepSchedule fixed(double eta) {
    StepSchedule s;
    s.kind = StepKind::fixed;
    s.eta = eta;
    return s;
  }
  static StepSchedule certified() {
    StepSchedule s;
    s.kind = StepKind::adaptive_certified;
    return s;
  }
  static StepSchedule empirical(double a, double b, double c) {
    StepSchedule s;
    s.kind = StepKind::adaptive_empirical;
    s.a = a;
    s.b = b;
    s.c = c;
    return s;
  }

  std::string describe() const {
    switch (kind) {
      case StepKind::fixed: return "fixed(" + std::to_string(eta) + ")";
      case StepKind::adaptive_certified: return "adaptive_certified";
      case StepKind::adaptive_empirical:
        return "adaptive_empirical(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ")";
    }
    return "unknown";
  }

  void validate() const {
    if (kind == StepKind::fixed && !(eta > 0.0)) throw ConfigError("fixed step size must be positive");
    if (kind == StepKind::adaptive_empirical && (!(a > 0.0) || b < 0.0 || c < 0.0 || !(b + c > 0.0)))
      throw ConfigError("empirical step needs a > 0, b >= 0, c >= 0 and b + c > 0");
  }
};

inline double empirical_step(const StepSchedule& s, double trace_p) { return s.a / (s.b + s.c * trace_p); }

// Tr(P) from an average cost: exact for isotropic noise, C = Tr(P Sigma_w) = sigma^2 Tr(P).
inline double trace_p_proxy(double cost, double noise_trace, Index n_x) {
  return cost * static_cast<double>(n_x) / noise_trace;
}

}  // namespace pglqr
