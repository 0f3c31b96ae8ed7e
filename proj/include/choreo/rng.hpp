#pragma once

#include <cstdint>
#include <random>

#include "choreo/common.hpp"

namespace choreo {

// Deterministic random stream. All experiment code draws through this class so
// that a run is reproducible from a single root seed. Child streams are forked
// with splitmix64 so that e.g. the replay buffer and the exploration noise
// never share a sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Canonical 53-bit double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    require(hi >= lo, "Rng::uniform: hi < lo");
    return lo + (hi - lo) * uniform();
  }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) {
    require(hi >= lo, "Rng::uniform_int: hi < lo");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  // Standard normal via Box-Muller; one spare is cached between calls.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Vec normal_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Vec uniform_vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  // Derive an independent child stream. Distinct ids give distinct, stable
  // sequences; forking does not disturb this stream's state.
  Rng fork(std::uint64_t stream_id) const {
    std::uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return Rng(z);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace choreo
