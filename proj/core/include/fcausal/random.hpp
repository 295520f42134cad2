#pragma once

#include <cstdint>
#include <random>

namespace fcausal {

/// Mixes a base seed with stream indices so that every (seed, i, j, ...)
/// tuple gets an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Thin wrapper over mt19937_64 with self-contained samplers. The standard
/// library distributions are implementation-defined; these are not, so draws
/// are bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                  // [0, 1)
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t n);  // uniform integer in [0, n)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double laplace(double scale);
  double student_t(int dof);
  double chi_square(int dof);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fcausal
