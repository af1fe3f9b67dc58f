#pragma once

// Seeded random streams. Every consumer draws from its own stream derived
// from the run seed, a named purpose and an index, so adding draws in one
// component never shifts the numbers another component sees.

#include <cstdint>
#include <random>
#include <vector>

namespace mfg {

enum class Stream : std::uint64_t {
  kPopulation = 1,
  kSupply = 2,
  kInit = 3,
  kEval = 4,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0);

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal by the Box-Muller transform; the second variate of each
  // pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::vector<double> normals(std::size_t n, double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace mfg
