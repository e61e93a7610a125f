#pragma once

#include <cstdint>
#include <random>

namespace ccseg {

// Seeded generator whose outputs are identical on every platform: the engine is
// mt19937_64 (fully specified by the standard) and all distributions are local.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n)
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with an index (splitmix64 finalizer) for per-item streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ccseg
