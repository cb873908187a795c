#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pglqr {

enum class StreamPurpose : std::uint64_t {
  perturbation = 1,
  initial_state = 2,
  noise = 3,
  baseline = 4,
  gradient_noise = 5,
};

inline const char* to_string(StreamPurpose p) {
  switch (p) {
    case StreamPurpose::perturbation: return "perturbation";
    case StreamPurpose::initial_state: return "initial_state";
    case StreamPurpose::noise: return "noise";
    case StreamPurpose::baseline: return "baseline";
    case StreamPurpose::gradient_noise: return "gradient_noise";
  }
  return "unknown";
}

// Address of one substream. `iteration` separates optimizer steps, `sub` separates
// the repeated rollouts (e.g. baseline rollouts) sharing one rollout index.
struct StreamLabel {
  std::uint64_t run_id = 0;
  std::uint64_t iteration = 0;
  std::uint64_t rollout_id = 0;
  std::uint64_t sub = 0;
  StreamPurpose purpose = StreamPurpose::noise;

  bool operator==(const StreamLabel&) const = default;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SeedSpec {
  std::uint64_t master_seed = 0;

  std::uint64_t derive(const StreamLabel& label) const {
    std::uint64_t h = splitmix64(master_seed ^ 0x5EEDULL);
    h = splitmix64(h ^ label.run_id);
    h = splitmix64(h ^ label.iteration);
    h = splitmix64(h ^ label.rollout_id);
    h = splitmix64(h ^ label.sub);
    h = splitmix64(h ^ static_cast<std::uint64_t>(label.purpose));
    return h;
  }

  Rng stream(const StreamLabel& label) const { return Rng(derive(label)); }
};

}  // namespace pglqr
